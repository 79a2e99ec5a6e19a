//! Exact geometry of the calibrated credal region.
//!
//! For a test point with per-label conformity scores `E` and threshold
//! `tau`, the region is `{lambda in simplex : sum_k lambda_k E_k >= tau}` —
//! the simplex cut by a single half-space, because the plausibility score is
//! linear in `lambda`. The region is stored intensionally as `(E, tau)`;
//! membership, per-label probability envelopes, and extreme points are all
//! closed-form linear algebra on those two fields. Lattice discretization is
//! kept only as a brute-force oracle and for the sampled PRPS baseline.

use crate::calibration::ConformityScores;
use crate::error::{CredalError, Result};
use crate::simplex::{LabelSpace, ProbabilityVector};

/// Weak-inequality slack for membership tests, preserving closure.
pub const MEMBERSHIP_TOL: f64 = 1e-12;

/// Sup-norm tolerance for deduplicating polytope vertices.
pub const VERTEX_DEDUP_TOL: f64 = 1e-10;

/// Default lattice resolution: 200 at K=3, scaled down for larger K to keep
/// the lattice size `C(m+K-1, K-1)` in check, floored at 20.
pub fn default_resolution(k: usize) -> usize {
    (200 * 3 / k).max(20)
}

/// The credal region for one test point: all plausibility vectors whose
/// score against `E` clears `tau`. Construction fails when `max_k E_k <
/// tau`, so a constructed region is always non-empty.
#[derive(Debug, Clone)]
pub struct CredalRegion {
    scores: ConformityScores,
    tau: f64,
    label_space: LabelSpace,
}

impl CredalRegion {
    pub fn new(scores: ConformityScores, tau: f64, label_space: LabelSpace) -> Result<Self> {
        if label_space.k() != scores.k() {
            return Err(CredalError::DimensionMismatch {
                expected: label_space.k(),
                got: scores.k(),
            });
        }
        let max_score = scores.max();
        if max_score < tau - MEMBERSHIP_TOL {
            return Err(CredalError::EmptyRegion { max_score, tau });
        }
        Ok(CredalRegion {
            scores,
            tau,
            label_space,
        })
    }

    /// Region over an unnamed label space of matching dimension.
    pub fn from_scores(scores: ConformityScores, tau: f64) -> Result<Self> {
        let space = LabelSpace::new(scores.k())?;
        Self::new(scores, tau, space)
    }

    pub fn scores(&self) -> &ConformityScores {
        &self.scores
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn label_space(&self) -> &LabelSpace {
        &self.label_space
    }

    pub fn k(&self) -> usize {
        self.scores.k()
    }

    /// Whether the region is the entire simplex (`tau = -inf` sentinel).
    pub fn is_vacuous(&self) -> bool {
        self.tau == f64::NEG_INFINITY
    }

    /// Membership: `sum_k lambda_k E_k >= tau - MEMBERSHIP_TOL`.
    pub fn contains(&self, lambda: &ProbabilityVector) -> Result<bool> {
        if lambda.k() != self.k() {
            return Err(CredalError::DimensionMismatch {
                expected: self.k(),
                got: lambda.k(),
            });
        }
        Ok(self.member(lambda.entries()))
    }

    /// Membership on raw entries; callers guarantee the dimension.
    pub(crate) fn member(&self, entries: &[f64]) -> bool {
        debug_assert_eq!(entries.len(), self.k());
        let mut score = 0.0;
        for (l, e) in entries.iter().zip(self.scores.per_label()) {
            score += l * e;
        }
        score >= self.tau - MEMBERSHIP_TOL
    }

    /// Per-label lower/upper probability bounds, in closed form.
    ///
    /// With `E*_{-k} = max_{j != k} E_j`, putting all non-`k` mass on the
    /// best other label gives the binding constraint in both directions:
    /// the largest feasible `lambda_k` solves
    /// `lambda_k E_k + (1 - lambda_k) E*_{-k} = tau` when label `k` alone
    /// cannot clear `tau`, and symmetrically for the smallest.
    pub fn envelope(&self) -> ProbabilityEnvelope {
        let k = self.k();
        let tau = self.tau;
        let mut lower = vec![0.0; k];
        let mut upper = vec![0.0; k];
        for label in 0..k {
            let own = self.scores.get(label);
            let best_other = self.scores.max_excluding(label);
            upper[label] = if own >= tau {
                1.0
            } else if best_other > own {
                ((best_other - tau) / (best_other - own)).clamp(0.0, 1.0)
            } else {
                0.0
            };
            lower[label] = if best_other >= tau {
                0.0
            } else {
                ((tau - best_other) / (own - best_other)).clamp(0.0, 1.0)
            };
        }
        ProbabilityEnvelope { lower, upper }
    }

    /// The exact vertices of the region polytope.
    ///
    /// These are (a) every simplex vertex `e_j` with `E_j >= tau`, and
    /// (b) for every pair with `E_j >= tau > E_l`, the point where the cut
    /// crosses the edge from `e_j` to `e_l`. Duplicates (within
    /// [`VERTEX_DEDUP_TOL`] in sup-norm) are removed; for the vacuous region
    /// the K simplex vertices are returned.
    pub fn extreme_points(&self) -> ExtremePoints {
        let k = self.k();
        let tau = self.tau;
        let scores = self.scores.per_label();
        let mut vertices: Vec<Vec<f64>> = Vec::new();

        let push_dedup = |candidate: Vec<f64>, vertices: &mut Vec<Vec<f64>>| {
            let duplicate = vertices.iter().any(|v| {
                v.iter()
                    .zip(&candidate)
                    .all(|(a, b)| (a - b).abs() <= VERTEX_DEDUP_TOL)
            });
            if !duplicate {
                vertices.push(candidate);
            }
        };

        for j in 0..k {
            if scores[j] >= tau {
                let mut v = vec![0.0; k];
                v[j] = 1.0;
                push_dedup(v, &mut vertices);
            }
        }
        for j in 0..k {
            if scores[j] < tau {
                continue;
            }
            for l in 0..k {
                if scores[l] >= tau {
                    continue;
                }
                // tau is finite here: scores[l] < tau rules out the vacuous
                // sentinel.
                let t = (tau - scores[l]) / (scores[j] - scores[l]);
                let mut v = vec![0.0; k];
                v[j] = t;
                v[l] = 1.0 - t;
                push_dedup(v, &mut vertices);
            }
        }

        ExtremePoints {
            vertices: vertices
                .into_iter()
                .map(|v| ProbabilityVector::new(v).expect("vertex lies on the simplex"))
                .collect(),
        }
    }

    /// All lattice points `c/m` (componentwise, `sum c = m`) that belong to
    /// the region, in lexicographic order of `c`.
    ///
    /// May be empty when `m` is too coarse to hit a thin region slice; the
    /// argmax one-hot vertex is always a lattice point, so in practice the
    /// result is non-empty for any constructed region.
    pub fn discretize(&self, resolution: usize) -> Vec<ProbabilityVector> {
        let mut members = Vec::new();
        self.for_each_lattice_member(resolution, |entries| {
            members.push(ProbabilityVector::new(entries.to_vec()).expect("lattice point"));
        });
        members
    }

    /// Visit region members of the resolution-`m` lattice in lexicographic
    /// order of the integer composition, without materializing the list.
    pub(crate) fn for_each_lattice_member(&self, resolution: usize, mut f: impl FnMut(&[f64])) {
        assert!(resolution >= 1, "resolution must be at least 1");
        let k = self.k();
        let mut counts = vec![0usize; k];
        let mut point = vec![0.0; k];
        self.lattice_recurse(resolution, 0, resolution, &mut counts, &mut point, &mut f);
    }

    fn lattice_recurse(
        &self,
        resolution: usize,
        position: usize,
        remaining: usize,
        counts: &mut [usize],
        point: &mut [f64],
        f: &mut impl FnMut(&[f64]),
    ) {
        let k = self.k();
        if position == k - 1 {
            counts[position] = remaining;
            for (target, &c) in point.iter_mut().zip(counts.iter()) {
                *target = c as f64 / resolution as f64;
            }
            if self.member(point) {
                f(point);
            }
            return;
        }
        for c in 0..=remaining {
            counts[position] = c;
            self.lattice_recurse(resolution, position + 1, remaining - c, counts, point, f);
        }
    }
}

/// Per-label probability bounds `[lower_k, upper_k]` induced by a region.
///
/// Always satisfies `0 <= lower_k <= upper_k <= 1` and the sure-loss
/// avoidance condition `sum lower <= 1 <= sum upper`.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ProbabilityEnvelope {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl ProbabilityEnvelope {
    /// Tolerance on the sure-loss sums when validating raw envelopes.
    pub const SURE_LOSS_TOL: f64 = 1e-9;

    /// Validate a raw envelope: componentwise order, range, and sure-loss
    /// avoidance.
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(CredalError::LengthMismatch {
                left: lower.len(),
                right: upper.len(),
            });
        }
        for (lo, up) in lower.iter().zip(&upper) {
            if !(0.0..=1.0).contains(lo) || !(0.0..=1.0).contains(up) || lo > up {
                return Err(CredalError::InvalidParameter {
                    reason: format!("envelope bounds out of order: [{lo}, {up}]"),
                });
            }
        }
        let env = ProbabilityEnvelope { lower, upper };
        env.check_sure_loss()?;
        Ok(env)
    }

    pub fn k(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    /// Enforce `sum lower <= 1 <= sum upper` within [`Self::SURE_LOSS_TOL`].
    pub fn check_sure_loss(&self) -> Result<()> {
        let lower_sum: f64 = self.lower.iter().sum();
        let upper_sum: f64 = self.upper.iter().sum();
        if lower_sum > 1.0 + Self::SURE_LOSS_TOL || upper_sum < 1.0 - Self::SURE_LOSS_TOL {
            return Err(CredalError::SureLossViolation {
                lower_sum,
                upper_sum,
            });
        }
        Ok(())
    }
}

/// The extreme points of a region polytope.
#[derive(Debug, Clone)]
pub struct ExtremePoints {
    vertices: Vec<ProbabilityVector>,
}

impl ExtremePoints {
    pub fn vertices(&self) -> &[ProbabilityVector] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Coordinate-wise min/max over the vertices; agrees with the closed
    /// form of [`CredalRegion::envelope`] because a linear functional over a
    /// polytope attains its extremes at vertices.
    pub fn envelope(&self) -> ProbabilityEnvelope {
        let k = self.vertices[0].k();
        let mut lower = vec![f64::INFINITY; k];
        let mut upper = vec![f64::NEG_INFINITY; k];
        for v in &self.vertices {
            for (label, &x) in v.entries().iter().enumerate() {
                lower[label] = lower[label].min(x);
                upper[label] = upper[label].max(x);
            }
        }
        ProbabilityEnvelope { lower, upper }
    }
}
