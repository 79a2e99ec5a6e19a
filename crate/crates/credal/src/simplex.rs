//! Probability-simplex primitives: label spaces, categorical probability
//! vectors, label subsets, Shannon entropy, and precise highest-density sets.
//!
//! Everything downstream (calibration, credal regions, prediction sets,
//! uncertainty) is built on these types. All values are immutable after
//! construction and all operations are pure.

use crate::error::{CredalError, Result};
use serde::{Deserialize, Serialize};

/// Absolute tolerance on the simplex sum after renormalization.
pub const SIMPLEX_TOL: f64 = 1e-9;

/// Tolerance for probability ties in highest-density-set cutoffs.
pub const TIE_TOL: f64 = 1e-12;

/// Constructors renormalize inputs whose sum lies within this window of 1
/// and reject anything further out.
pub const RENORM_WINDOW: f64 = 1e-6;

/// The finite label space `{0, ..., K-1}`.
///
/// Labels are 0-indexed internally; 1-indexed only in rendered output.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelSpace {
    k_count: usize,
    names: Option<Vec<String>>,
}

impl LabelSpace {
    /// A label space with `k` unnamed classes. Requires `k >= 2`.
    pub fn new(k: usize) -> Result<Self> {
        if k < 2 {
            return Err(CredalError::InvalidLabelSpace {
                reason: format!("need at least 2 classes, got {k}"),
            });
        }
        Ok(LabelSpace {
            k_count: k,
            names: None,
        })
    }

    /// A label space with named classes; names must be distinct and match `k`.
    pub fn with_names(k: usize, names: Vec<String>) -> Result<Self> {
        let mut space = Self::new(k)?;
        if names.len() != k {
            return Err(CredalError::InvalidLabelSpace {
                reason: format!("{} names for {k} classes", names.len()),
            });
        }
        for (i, a) in names.iter().enumerate() {
            if names[..i].contains(a) {
                return Err(CredalError::InvalidLabelSpace {
                    reason: format!("duplicate label name {a:?}"),
                });
            }
        }
        space.names = Some(names);
        Ok(space)
    }

    pub fn k(&self) -> usize {
        self.k_count
    }

    pub fn names(&self) -> Option<&[String]> {
        self.names.as_deref()
    }

    /// Display name for a label: the configured name, or the 1-indexed
    /// position for rendered output.
    pub fn display_name(&self, label: usize) -> String {
        match &self.names {
            Some(names) => names[label].clone(),
            None => (label + 1).to_string(),
        }
    }
}

/// A point on the `(K-1)`-simplex: entries are nonnegative and sum to 1
/// within [`SIMPLEX_TOL`] after construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct ProbabilityVector {
    entries: Vec<f64>,
}

impl ProbabilityVector {
    /// Validate and renormalize raw entries.
    ///
    /// Entries must be finite and nonnegative; the sum must lie within
    /// [`RENORM_WINDOW`] of 1, after which entries are divided by the sum.
    pub fn new(entries: Vec<f64>) -> Result<Self> {
        if entries.len() < 2 {
            return Err(CredalError::InvalidProbabilityVector {
                reason: format!("need at least 2 entries, got {}", entries.len()),
            });
        }
        let mut sum = 0.0;
        for (k, &p) in entries.iter().enumerate() {
            if !p.is_finite() {
                return Err(CredalError::InvalidProbabilityVector {
                    reason: format!("entry {k} is not finite"),
                });
            }
            if p < 0.0 {
                return Err(CredalError::InvalidProbabilityVector {
                    reason: format!("entry {k} is negative ({p})"),
                });
            }
            sum += p;
        }
        if (sum - 1.0).abs() > RENORM_WINDOW {
            return Err(CredalError::InvalidProbabilityVector {
                reason: format!("entries sum to {sum}, outside the renormalization window"),
            });
        }
        // Renormalization is skipped for already-normalized input so that
        // construction is idempotent and file round-trips are bit-exact.
        let entries: Vec<f64> = if (sum - 1.0).abs() <= SIMPLEX_TOL {
            entries
        } else {
            entries.iter().map(|p| p / sum).collect()
        };
        debug_assert!((entries.iter().sum::<f64>() - 1.0).abs() <= SIMPLEX_TOL);
        Ok(ProbabilityVector { entries })
    }

    /// The one-hot vector with all mass on `label`.
    pub fn one_hot(k: usize, label: usize) -> Self {
        let mut entries = vec![0.0; k];
        entries[label] = 1.0;
        ProbabilityVector { entries }
    }

    /// The uniform distribution over `k` labels.
    pub fn uniform(k: usize) -> Self {
        ProbabilityVector {
            entries: vec![1.0 / k as f64; k],
        }
    }

    pub fn k(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn get(&self, label: usize) -> f64 {
        self.entries[label]
    }

    /// Inner product with a raw coefficient slice of the same length.
    pub fn dot(&self, coeffs: &[f64]) -> f64 {
        debug_assert_eq!(self.entries.len(), coeffs.len());
        self.entries
            .iter()
            .zip(coeffs)
            .map(|(p, c)| p * c)
            .sum()
    }
}

impl TryFrom<Vec<f64>> for ProbabilityVector {
    type Error = CredalError;

    fn try_from(entries: Vec<f64>) -> Result<Self> {
        ProbabilityVector::new(entries)
    }
}

impl From<ProbabilityVector> for Vec<f64> {
    fn from(p: ProbabilityVector) -> Vec<f64> {
        p.entries
    }
}

/// A subset of `{0, ..., K-1}` stored as a bitmask (bit `k` = label `k`).
///
/// Supports label spaces up to 32 classes, well past the subset-enumeration
/// cap used by the prediction-set search.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct LabelSet {
    mask: u32,
    k: usize,
}

impl LabelSet {
    pub fn empty(k: usize) -> Self {
        assert!(k <= 32, "LabelSet supports at most 32 labels");
        LabelSet { mask: 0, k }
    }

    pub fn full(k: usize) -> Self {
        assert!(k <= 32, "LabelSet supports at most 32 labels");
        let mask = if k == 32 { u32::MAX } else { (1u32 << k) - 1 };
        LabelSet { mask, k }
    }

    pub fn from_mask(mask: u32, k: usize) -> Self {
        let full = Self::full(k);
        assert!(mask & !full.mask == 0, "mask has bits outside the label space");
        LabelSet { mask, k }
    }

    pub fn from_labels(labels: &[usize], k: usize) -> Self {
        let mut set = Self::empty(k);
        for &label in labels {
            assert!(label < k, "label {label} outside space of size {k}");
            set.mask |= 1 << label;
        }
        set
    }

    pub fn singleton(label: usize, k: usize) -> Self {
        Self::from_labels(&[label], k)
    }

    pub fn mask(&self) -> u32 {
        self.mask
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn contains(&self, label: usize) -> bool {
        label < self.k && self.mask & (1 << label) != 0
    }

    pub fn cardinality(&self) -> usize {
        self.mask.count_ones() as usize
    }

    pub fn is_empty(&self) -> bool {
        self.mask == 0
    }

    pub fn complement(&self) -> Self {
        LabelSet {
            mask: !self.mask & Self::full(self.k).mask,
            k: self.k,
        }
    }

    pub fn union(&self, other: &Self) -> Self {
        debug_assert_eq!(self.k, other.k);
        LabelSet {
            mask: self.mask | other.mask,
            k: self.k,
        }
    }

    pub fn is_subset_of(&self, other: &Self) -> bool {
        self.mask & !other.mask == 0
    }

    pub fn insert(&mut self, label: usize) {
        assert!(label < self.k);
        self.mask |= 1 << label;
    }

    /// Member labels in ascending order.
    pub fn labels(&self) -> Vec<usize> {
        (0..self.k).filter(|&l| self.contains(l)).collect()
    }

    /// Sum of `values[k]` over member labels.
    pub fn sum_over(&self, values: &[f64]) -> f64 {
        debug_assert_eq!(values.len(), self.k);
        let mut total = 0.0;
        let mut bits = self.mask;
        while bits != 0 {
            let label = bits.trailing_zeros() as usize;
            total += values[label];
            bits &= bits - 1;
        }
        total
    }
}

impl std::fmt::Display for LabelSet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{{")?;
        for (i, label) in self.labels().iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{label}")?;
        }
        write!(f, "}}")
    }
}

/// Shannon entropy in bits, with the convention `0 * log2(0) = 0`.
///
/// The result lies in `[0, log2(K)]`.
pub fn shannon_entropy(p: &ProbabilityVector) -> f64 {
    entropy_bits(p.entries())
}

/// Entropy of a raw nonnegative slice (callers guarantee it sums to ~1).
pub(crate) fn entropy_bits(entries: &[f64]) -> f64 {
    let mut h = 0.0;
    for &p in entries {
        if p > 0.0 {
            h -= p * p.log2();
        }
    }
    h.max(0.0)
}

/// The permutation sorting `p` in descending order, ties broken by
/// ascending label index.
pub fn descending_sort_permutation(p: &ProbabilityVector) -> Vec<usize> {
    let mut order: Vec<usize> = (0..p.k()).collect();
    order.sort_by(|&a, &b| {
        p.get(b)
            .partial_cmp(&p.get(a))
            .expect("probabilities are finite")
            .then(a.cmp(&b))
    });
    order
}

/// The precise highest-density set of `p` at level `1 - delta`.
///
/// Sorts labels by descending probability, takes the minimal prefix whose
/// mass reaches `1 - delta`, then includes every label tied (within
/// [`TIE_TOL`]) with the last included label. This is the cutoff set
/// `{y : p_y >= c}` for the largest viable per-label cutoff `c`.
pub fn highest_density_set(p: &ProbabilityVector, delta: f64) -> LabelSet {
    highest_density_set_raw(p.entries(), delta)
}

/// Allocation-light variant for hot loops over raw lattice points.
pub(crate) fn highest_density_set_raw(entries: &[f64], delta: f64) -> LabelSet {
    let k = entries.len();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| {
        entries[b]
            .partial_cmp(&entries[a])
            .expect("probabilities are finite")
            .then(a.cmp(&b))
    });
    // The mass comparison gets the same slack as ties so that exact-boundary
    // prefixes (like 0.6 + 0.3 vs 0.9) are decided by the real-arithmetic
    // value, not accumulated rounding.
    let target = 1.0 - delta - TIE_TOL;
    let mut set = LabelSet::empty(k);
    let mut mass = 0.0;
    let mut cutoff = f64::INFINITY;
    for &label in &order {
        if mass >= target && entries[label] < cutoff - TIE_TOL {
            break;
        }
        if mass < target {
            cutoff = entries[label];
        }
        set.insert(label);
        mass += entries[label];
    }
    set
}
