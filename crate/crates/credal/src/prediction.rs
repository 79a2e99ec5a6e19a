//! Lower/upper probabilities of label sets and the derived prediction sets.
//!
//! The lower probability of a set `A` under an envelope `(lower, upper)` is
//! the sure-loss-avoiding form
//! `max{ sum_{k in A} lower_k, 1 - sum_{k not in A} upper_k }`, clamped to
//! `[0, 1]`. The imprecise highest-density set (IHDS) is the greedy search
//! over all `2^K` subsets in ascending lower-probability order; a direct
//! minimum-cardinality oracle audits it. The plausibility-reduced predictive
//! set (PRPS) baseline is the union of precise highest-density sets over
//! sampled region members, with the exact polytope vertices always included
//! so the union is never under-approximated at the extremes.

use crate::error::{CredalError, Result};
use crate::region::{CredalRegion, ProbabilityEnvelope};
use crate::simplex::{highest_density_set, highest_density_set_raw, LabelSet};
use serde::{Deserialize, Serialize};

/// Default cap on `K` for the `2^K` subset enumerations.
pub const DEFAULT_K_CAP: usize = 20;

/// Which construction produced a prediction set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PredictionMethod {
    /// Greedy ascending-lower-probability search over all subsets.
    IhdsAlgorithm1,
    /// Direct minimum-cardinality search (audit oracle).
    IhdsMinOracle,
    /// Union of precise highest-density sets over region samples.
    Prps,
}

/// A label prediction set together with its lower probability.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PredictionSetResult {
    pub set: LabelSet,
    pub lower_probability: f64,
    pub method: PredictionMethod,
    pub delta: f64,
}

/// Lower probability of `a` under the envelope, per the sure-loss form.
///
/// Fails with `SureLossViolation` when the envelope sums are inconsistent
/// beyond tolerance (a corrupted envelope; region-derived envelopes always
/// pass).
pub fn lower_probability(env: &ProbabilityEnvelope, a: &LabelSet) -> Result<f64> {
    check_dims(env, a)?;
    env.check_sure_loss()?;
    Ok(lower_probability_unchecked(env, a.mask()))
}

fn check_dims(env: &ProbabilityEnvelope, a: &LabelSet) -> Result<()> {
    if env.k() != a.k() {
        return Err(CredalError::DimensionMismatch {
            expected: env.k(),
            got: a.k(),
        });
    }
    Ok(())
}

fn lower_probability_unchecked(env: &ProbabilityEnvelope, mask: u32) -> f64 {
    let mut lower_sum = 0.0;
    let mut upper_complement = 0.0;
    for (label, (lo, up)) in env.lower().iter().zip(env.upper()).enumerate() {
        if mask & (1 << label) != 0 {
            lower_sum += lo;
        } else {
            upper_complement += up;
        }
    }
    lower_sum.max(1.0 - upper_complement).clamp(0.0, 1.0)
}

/// Upper probability via conjugacy: `1 - lower_probability(complement)`.
pub fn upper_probability(env: &ProbabilityEnvelope, a: &LabelSet) -> Result<f64> {
    Ok(1.0 - lower_probability(env, &a.complement())?)
}

/// Exact infimum of `sum_{k in A} lambda_k` over the region polytope,
/// computed at the vertices (a linear objective attains its minimum there).
pub fn exact_lower_probability(region: &CredalRegion, a: &LabelSet) -> Result<f64> {
    if a.k() != region.k() {
        return Err(CredalError::DimensionMismatch {
            expected: region.k(),
            got: a.k(),
        });
    }
    let minimum = region
        .extreme_points()
        .vertices()
        .iter()
        .map(|v| a.sum_over(v.entries()))
        .fold(f64::INFINITY, f64::min);
    Ok(minimum.clamp(0.0, 1.0))
}

fn check_enumeration(k: usize, k_cap: usize) -> Result<()> {
    if k > k_cap {
        return Err(CredalError::LabelSpaceTooLarge { k, cap: k_cap });
    }
    Ok(())
}

/// The greedy IHDS search: enumerate all `2^K` subsets, sort ascending by
/// lower probability (ties: lower cardinality first, then bitmask), and
/// return the first subset whose lower probability reaches `1 - delta`.
///
/// The full label set (lower probability 1) always qualifies, so the search
/// always terminates with a result.
pub fn ihds_algorithm1(
    env: &ProbabilityEnvelope,
    delta: f64,
    k_cap: usize,
) -> Result<PredictionSetResult> {
    let k = env.k();
    check_enumeration(k, k_cap)?;
    env.check_sure_loss()?;

    let mut entries: Vec<(f64, u32, u32)> = (0..(1u64 << k) as u32)
        .map(|mask| (lower_probability_unchecked(env, mask), mask.count_ones(), mask))
        .collect();
    entries.sort_by(|a, b| {
        a.0.total_cmp(&b.0)
            .then(a.1.cmp(&b.1))
            .then(a.2.cmp(&b.2))
    });

    let target = 1.0 - delta;
    for (p_lower, _, mask) in entries {
        if p_lower >= target {
            return Ok(PredictionSetResult {
                set: LabelSet::from_mask(mask, k),
                lower_probability: p_lower,
                method: PredictionMethod::IhdsAlgorithm1,
                delta,
            });
        }
    }
    unreachable!("the full label set has lower probability 1");
}

/// The definitional IHDS: among all subsets whose lower probability reaches
/// `1 - delta`, one of minimum cardinality (ties by bitmask). Used to audit
/// the greedy search.
pub fn ihds_min_cardinality(env: &ProbabilityEnvelope, delta: f64) -> Result<PredictionSetResult> {
    let k = env.k();
    check_enumeration(k, DEFAULT_K_CAP)?;
    env.check_sure_loss()?;

    let target = 1.0 - delta;
    let mut best: Option<(u32, u32, f64)> = None;
    for mask in 0..(1u64 << k) as u32 {
        let p_lower = lower_probability_unchecked(env, mask);
        if p_lower < target {
            continue;
        }
        let cardinality = mask.count_ones();
        let better = match best {
            None => true,
            Some((best_card, best_mask, _)) => {
                cardinality < best_card || (cardinality == best_card && mask < best_mask)
            }
        };
        if better {
            best = Some((cardinality, mask, p_lower));
        }
    }
    let (_, mask, p_lower) = best.expect("the full label set always qualifies");
    Ok(PredictionSetResult {
        set: LabelSet::from_mask(mask, k),
        lower_probability: p_lower,
        method: PredictionMethod::IhdsMinOracle,
        delta,
    })
}

/// The plausibility-reduced predictive set: every label that enters the
/// precise highest-density set of at least one sampled region member.
///
/// Samples are the resolution-`m` lattice members plus the exact extreme
/// points. The reported lower probability is that of the resulting set
/// under the region's envelope.
pub fn prps(region: &CredalRegion, delta: f64, resolution: usize) -> Result<PredictionSetResult> {
    let k = region.k();
    let mut union = LabelSet::empty(k);
    let full = LabelSet::full(k);

    for vertex in region.extreme_points().vertices() {
        union = union.union(&highest_density_set(vertex, delta));
        if union == full {
            break;
        }
    }
    if union != full {
        region.for_each_lattice_member(resolution, |entries| {
            if union == full {
                return;
            }
            union = union.union(&highest_density_set_raw(entries, delta));
        });
    }

    let p_lower = lower_probability(&region.envelope(), &union)?;
    Ok(PredictionSetResult {
        set: union,
        lower_probability: p_lower,
        method: PredictionMethod::Prps,
        delta,
    })
}
