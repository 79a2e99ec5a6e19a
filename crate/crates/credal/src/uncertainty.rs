//! Lower/upper Shannon entropy over a credal region and the additive
//! uncertainty decomposition.
//!
//! Total uncertainty is the upper entropy `sup H(P)` over the region,
//! aleatoric uncertainty the lower entropy `inf H(P)`, and epistemic
//! uncertainty their difference. Entropy is concave, so the infimum sits at
//! a polytope vertex and is found by exact vertex evaluation. The supremum
//! is `log2 K` whenever the uniform vector is a member; otherwise a
//! conditional-gradient ascent with away steps runs over the polytope, using
//! exact vertex evaluation as the linear-minimization oracle and reporting
//! the final duality gap as a certificate. If the ascent hits the iteration
//! cap it falls back to the best lattice point.

use crate::error::Result;
use crate::region::{default_resolution, CredalRegion, ExtremePoints};
use crate::simplex::{entropy_bits, shannon_entropy, ProbabilityVector};
use serde::{Deserialize, Serialize};

/// Default certificate tolerance for the entropy ascent, in bits.
pub const DEFAULT_ENTROPY_TOL: f64 = 1e-7;

/// Iteration cap for the entropy ascent.
pub const MAX_ASCENT_ITERATIONS: usize = 10_000;

const INV_LN_2: f64 = std::f64::consts::LOG2_E;

/// How the upper-entropy value was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MaxEntropyRoute {
    /// The uniform vector is a member; the supremum `log2 K` is exact.
    UniformMember,
    /// Conditional-gradient ascent converged with a certified duality gap.
    Ascent,
    /// The ascent stalled; the value is the best lattice point (uncertified).
    LatticeFallback,
}

/// Result of the upper-entropy maximization.
#[derive(Debug, Clone)]
pub struct MaxEntropy {
    /// Entropy in bits at `point`; a lower bound on the true supremum.
    pub value: f64,
    pub point: ProbabilityVector,
    pub iterations: usize,
    /// Final duality gap in bits when a certificate exists (`UniformMember`
    /// is exact, `Ascent` certifies `sup - value <= gap`).
    pub duality_gap: Option<f64>,
    pub route: MaxEntropyRoute,
}

/// Interval bounds on the decomposition from vertex entropies alone.
///
/// The mixture-weight supremum `sup_beta sum_s beta_s H_s` is linear in the
/// weights and hence attained at a vertex of the weight simplex, so it
/// collapses to `max_s H_s`; the bounds below are computed with that
/// collapsed value.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VertexEntropyBounds {
    /// `[max_s H_s, max_s H_s + log2 S]` brackets the total uncertainty.
    pub tu_interval: (f64, f64),
    /// Exact aleatoric uncertainty: `min_s H_s`.
    pub au_point: f64,
    pub eu_interval: (f64, f64),
    /// Number of extreme points `S`.
    pub s_count: usize,
}

/// The full uncertainty decomposition for one region.
#[derive(Debug, Clone)]
pub struct UncertaintyReport {
    /// Aleatoric uncertainty `inf H`, in bits.
    pub lower_entropy: f64,
    /// Total uncertainty `sup H`, in bits.
    pub upper_entropy: f64,
    /// Epistemic uncertainty: exactly `upper_entropy - lower_entropy`.
    pub epistemic: f64,
    pub argmin_vertex: ProbabilityVector,
    pub argmax_point: ProbabilityVector,
    pub optimizer_iterations: usize,
    /// Certified ascent gap, when the ascent route produced the supremum.
    pub duality_gap: Option<f64>,
    pub max_entropy_route: MaxEntropyRoute,
    pub vertex_bounds: Option<VertexEntropyBounds>,
}

/// Exact lower entropy: the minimum of `H` over the region's extreme points,
/// valid because a concave function over a polytope is minimized at a
/// vertex. Returns the minimizing vertex as witness.
pub fn lower_entropy(region: &CredalRegion) -> (f64, ProbabilityVector) {
    let points = region.extreme_points();
    let mut best = f64::INFINITY;
    let mut witness = 0;
    for (i, v) in points.vertices().iter().enumerate() {
        let h = shannon_entropy(v);
        if h < best {
            best = h;
            witness = i;
        }
    }
    (best, points.vertices()[witness].clone())
}

/// Upper entropy over the region, certified to `tol` bits on the ascent
/// path.
pub fn upper_entropy(region: &CredalRegion, tol: f64) -> MaxEntropy {
    let k = region.k();

    let uniform = ProbabilityVector::uniform(k);
    if region.member(uniform.entries()) {
        return MaxEntropy {
            value: (k as f64).log2(),
            point: uniform,
            iterations: 0,
            duality_gap: Some(0.0),
            route: MaxEntropyRoute::UniformMember,
        };
    }

    let points = region.extreme_points();
    let vertices = points.vertices();
    if vertices.len() == 1 {
        return MaxEntropy {
            value: shannon_entropy(&vertices[0]),
            point: vertices[0].clone(),
            iterations: 0,
            duality_gap: Some(0.0),
            route: MaxEntropyRoute::Ascent,
        };
    }

    ascend(region, vertices, tol)
}

/// Away-step conditional gradient on the vertex polytope. The iterate is
/// kept as an explicit convex combination of vertices so it never drifts
/// off the region.
fn ascend(region: &CredalRegion, vertices: &[ProbabilityVector], tol: f64) -> MaxEntropy {
    let k = region.k();
    let s = vertices.len();
    let mut weights = vec![1.0 / s as f64; s];
    let mut x = combine(vertices, &weights, k);
    let mut gradient = vec![0.0; k];
    let reachable: Vec<bool> = (0..k)
        .map(|label| vertices.iter().any(|v| v.get(label) > 0.0))
        .collect();

    for iteration in 1..=MAX_ASCENT_ITERATIONS {
        for (label, g) in gradient.iter_mut().enumerate() {
            *g = if reachable[label] {
                -(x[label].max(1e-300).log2() + INV_LN_2)
            } else {
                0.0
            };
        }

        let dot = |p: &[f64]| -> f64 { p.iter().zip(&gradient).map(|(a, g)| a * g).sum() };
        let x_value = dot(&x);

        let mut fw_index = 0;
        let mut fw_value = f64::NEG_INFINITY;
        let mut away_index = 0;
        let mut away_value = f64::INFINITY;
        for (i, v) in vertices.iter().enumerate() {
            let value = dot(v.entries());
            if value > fw_value {
                fw_value = value;
                fw_index = i;
            }
            if weights[i] > 0.0 && value < away_value {
                away_value = value;
                away_index = i;
            }
        }

        let gap = fw_value - x_value;
        if gap <= tol {
            let point = ProbabilityVector::new(x).expect("iterate stays on the simplex");
            return MaxEntropy {
                value: shannon_entropy(&point),
                point,
                iterations: iteration,
                duality_gap: Some(gap.max(0.0)),
                route: MaxEntropyRoute::Ascent,
            };
        }

        let away_gain = x_value - away_value;
        if gap >= away_gain || weights[away_index] >= 1.0 {
            // forward step toward the best vertex
            let gamma = line_search(&x, vertices[fw_index].entries());
            for w in weights.iter_mut() {
                *w *= 1.0 - gamma;
            }
            weights[fw_index] += gamma;
        } else {
            // away step from the worst active vertex
            let away_weight = weights[away_index];
            let gamma_max = away_weight / (1.0 - away_weight);
            let target: Vec<f64> = x
                .iter()
                .zip(vertices[away_index].entries())
                .map(|(xi, vi)| (xi + gamma_max * (xi - vi)).max(0.0))
                .collect();
            let gamma = line_search(&x, &target) * gamma_max;
            for w in weights.iter_mut() {
                *w *= 1.0 + gamma;
            }
            weights[away_index] -= gamma;
        }

        // renormalize and drop negligible weights
        for w in weights.iter_mut() {
            if *w < 1e-15 {
                *w = 0.0;
            }
        }
        let total: f64 = weights.iter().sum();
        for w in weights.iter_mut() {
            *w /= total;
        }
        x = combine(vertices, &weights, k);
    }

    // Stalled: fall back to the best lattice member (or the final iterate if
    // it is better).
    let mut best_value = entropy_bits(&x);
    let mut best_point = x.clone();
    region.for_each_lattice_member(default_resolution(k), |entries| {
        let h = entropy_bits(entries);
        if h > best_value {
            best_value = h;
            best_point = entries.to_vec();
        }
    });
    let point = ProbabilityVector::new(best_point).expect("lattice member");
    MaxEntropy {
        value: shannon_entropy(&point),
        point,
        iterations: MAX_ASCENT_ITERATIONS,
        duality_gap: None,
        route: MaxEntropyRoute::LatticeFallback,
    }
}

fn combine(vertices: &[ProbabilityVector], weights: &[f64], k: usize) -> Vec<f64> {
    let mut x = vec![0.0; k];
    for (v, &w) in vertices.iter().zip(weights) {
        if w == 0.0 {
            continue;
        }
        for (xi, &vi) in x.iter_mut().zip(v.entries()) {
            *xi += w * vi;
        }
    }
    x
}

/// Exact line search for `H(x + gamma (target - x))` over `[0, 1]` via
/// bisection on the (monotone decreasing) directional derivative.
fn line_search(x: &[f64], target: &[f64]) -> f64 {
    let derivative = |gamma: f64| -> f64 {
        let mut d = 0.0;
        for (&xi, &ti) in x.iter().zip(target) {
            let step = ti - xi;
            if step == 0.0 {
                continue;
            }
            let z = (xi + gamma * step).max(1e-300);
            d += step * (-z.log2() - INV_LN_2);
        }
        d
    };
    if derivative(1.0) >= 0.0 {
        return 1.0;
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if derivative(mid) >= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// The additive decomposition: total = upper entropy, aleatoric = lower
/// entropy, epistemic = their difference. Uses the default ascent tolerance
/// and attaches the extreme-point interval bounds.
pub fn decompose(region: &CredalRegion) -> Result<UncertaintyReport> {
    let (au, argmin) = lower_entropy(region);
    let max_entropy = upper_entropy(region, DEFAULT_ENTROPY_TOL);
    let tu = max_entropy.value.max(au);
    let bounds = vertex_entropy_bounds(&region.extreme_points());
    Ok(UncertaintyReport {
        lower_entropy: au,
        upper_entropy: tu,
        epistemic: tu - au,
        argmin_vertex: argmin,
        argmax_point: max_entropy.point,
        optimizer_iterations: max_entropy.iterations,
        duality_gap: max_entropy.duality_gap,
        max_entropy_route: max_entropy.route,
        vertex_bounds: Some(bounds),
    })
}

/// Interval bounds on the decomposition from vertex entropies alone.
pub fn vertex_entropy_bounds(points: &ExtremePoints) -> VertexEntropyBounds {
    let entropies: Vec<f64> = points.vertices().iter().map(shannon_entropy).collect();
    let s = entropies.len();
    let h_min = entropies.iter().copied().fold(f64::INFINITY, f64::min);
    let h_max = entropies.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    // linear sup over mixture weights = max vertex entropy
    let sup_linear = h_max;
    let l_tu = sup_linear.max(h_max);
    let tu_hi = sup_linear + (s as f64).log2();
    VertexEntropyBounds {
        tu_interval: (l_tu, tu_hi),
        au_point: h_min,
        eu_interval: ((l_tu - h_min).max(0.0), tu_hi - h_min),
        s_count: s,
    }
}
