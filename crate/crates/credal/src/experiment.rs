//! The evaluation protocol: seeded random splits, per-point prediction,
//! coverage and inefficiency metrics, the type-2 validity estimator, and the
//! alpha/delta trade-off grid.
//!
//! Each seed shuffles the dataset, splits it into calibration and test
//! halves, calibrates the threshold on the calibration half, and runs the
//! full per-point pipeline (region, envelope, greedy IHDS, sampled PRPS) on
//! the test half. Random streams are derived per (seed, point), so parallel
//! scheduling cannot change any result; only the wall-clock fields are
//! nondeterministic.

use crate::calibration::{calibrate, conformity_scores, CalibrationRecord};
use crate::error::{CredalError, Result};
use crate::prediction::{ihds_algorithm1, prps, upper_probability};
use crate::region::{default_resolution, CredalRegion, ProbabilityEnvelope};
use crate::simplex::{LabelSet, ProbabilityVector};
use crate::synthetic::stream_rng;
use crate::prediction::DEFAULT_K_CAP;
use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::time::Instant;

const SALT_SHUFFLE: u64 = 0x53_48_55_46;
const SALT_LABEL: u64 = 0x4C_41_42_4C;

/// Significance levels and protocol knobs for one experiment cell.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    /// Overall miscoverage budget; the defaults split it as alpha = delta =
    /// epsilon / 2.
    pub epsilon: f64,
    pub alpha: f64,
    pub delta: f64,
    pub seeds: Vec<u64>,
    /// Calibration share of each split.
    pub split_fraction: f64,
    /// PRPS lattice resolution.
    pub resolution: usize,
    /// Guardrail for the subset enumeration.
    pub k_cap: usize,
}

/// `delta` such that `(1 - alpha)(1 - delta) = 1 - epsilon`.
pub fn derived_delta(epsilon: f64, alpha: f64) -> f64 {
    1.0 - (1.0 - epsilon) / (1.0 - alpha)
}

impl ExperimentConfig {
    /// The default split `alpha = delta = epsilon / 2` with twenty seeds.
    pub fn half_half(epsilon: f64, k: usize) -> Result<Self> {
        let config = ExperimentConfig {
            epsilon,
            alpha: epsilon / 2.0,
            delta: epsilon / 2.0,
            seeds: (0..20).collect(),
            split_fraction: 0.5,
            resolution: default_resolution(k),
            k_cap: DEFAULT_K_CAP,
        };
        config.validate()?;
        Ok(config)
    }

    /// Explicit `alpha`; `delta` is derived from the budget constraint.
    pub fn with_alpha(epsilon: f64, alpha: f64, k: usize) -> Result<Self> {
        let config = ExperimentConfig {
            epsilon,
            alpha,
            delta: derived_delta(epsilon, alpha),
            seeds: (0..20).collect(),
            split_fraction: 0.5,
            resolution: default_resolution(k),
            k_cap: DEFAULT_K_CAP,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |reason: String| Err(CredalError::InvalidParameter { reason });
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return bad(format!("epsilon must be in (0,1), got {}", self.epsilon));
        }
        if !(self.alpha > 0.0 && self.alpha < self.epsilon) {
            return bad(format!(
                "alpha must be in (0, epsilon), got alpha={} epsilon={}",
                self.alpha, self.epsilon
            ));
        }
        if !(0.0..1.0).contains(&self.delta) {
            return bad(format!("delta must be in [0,1), got {}", self.delta));
        }
        if !(self.split_fraction > 0.0 && self.split_fraction < 1.0) {
            return bad(format!(
                "split fraction must be in (0,1), got {}",
                self.split_fraction
            ));
        }
        if self.resolution == 0 {
            return bad("resolution must be positive".to_string());
        }
        if self.seeds.is_empty() {
            return bad("need at least one seed".to_string());
        }
        Ok(())
    }
}

/// Mean and sample standard deviation of a per-seed metric.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct MetricSummary {
    pub mean: f64,
    pub std: f64,
}

fn summarize(values: &[f64]) -> MetricSummary {
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    let std = if n > 1 {
        (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64).sqrt()
    } else {
        0.0
    };
    MetricSummary { mean, std }
}

/// Per-method aggregate metrics across seeds.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MethodSummary {
    pub label_coverage: MetricSummary,
    pub avg_inefficiency: MetricSummary,
}

/// One seed's metrics.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SeedMetrics {
    pub seed: u64,
    pub distribution_coverage: f64,
    pub ihds_label_coverage: f64,
    pub ihds_inefficiency: f64,
    pub prps_label_coverage: f64,
    pub prps_inefficiency: f64,
    pub ihds_in_prps_fraction: f64,
    pub empty_regions: usize,
    pub type2: BTreeMap<String, f64>,
    /// Median wall-clock time of the per-point prediction pipeline (region,
    /// envelope, greedy IHDS); nondeterministic, excluded from comparisons.
    pub median_point_ms: f64,
}

/// Aggregated experiment results for one (epsilon, alpha, delta) cell.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricsReport {
    pub epsilon: f64,
    pub alpha: f64,
    pub delta: f64,
    pub n_records: usize,
    pub distribution_coverage: MetricSummary,
    pub ihds: MethodSummary,
    pub prps: MethodSummary,
    /// Fraction of all test points (across seeds) whose IHDS is contained in
    /// the PRPS baseline.
    pub ihds_in_prps_fraction: f64,
    pub empty_regions: usize,
    /// Mean per-probe estimate of the joint event frequency, across seeds.
    pub type2_estimates: BTreeMap<String, f64>,
    /// The bound `delta / (1 - alpha)` those estimates are compared against.
    pub type2_bound: f64,
    /// Median per-point prediction time in milliseconds; nondeterministic.
    pub runtime_per_point_ms: f64,
    pub per_seed: Vec<SeedMetrics>,
}

/// Fraction of test points whose annotated distribution is a member of its
/// region (exact membership, no discretization).
pub fn distribution_coverage(
    regions: &[CredalRegion],
    lambdas: &[ProbabilityVector],
) -> Result<f64> {
    if regions.len() != lambdas.len() {
        return Err(CredalError::LengthMismatch {
            left: regions.len(),
            right: lambdas.len(),
        });
    }
    if regions.is_empty() {
        return Err(CredalError::InvalidParameter {
            reason: "coverage over zero points".to_string(),
        });
    }
    let mut hits = 0usize;
    for (region, lambda) in regions.iter().zip(lambdas) {
        if region.contains(lambda)? {
            hits += 1;
        }
    }
    Ok(hits as f64 / regions.len() as f64)
}

/// Expected coverage of the true label under the annotated distributions:
/// the mean over points of the plausibility mass inside each prediction set.
pub fn label_coverage(sets: &[LabelSet], lambdas: &[ProbabilityVector]) -> Result<f64> {
    if sets.len() != lambdas.len() {
        return Err(CredalError::LengthMismatch {
            left: sets.len(),
            right: lambdas.len(),
        });
    }
    if sets.is_empty() {
        return Err(CredalError::InvalidParameter {
            reason: "coverage over zero points".to_string(),
        });
    }
    let total: f64 = sets
        .iter()
        .zip(lambdas)
        .map(|(set, lambda)| set.sum_over(lambda.entries()))
        .sum();
    Ok(total / sets.len() as f64)
}

/// Mean prediction-set cardinality.
pub fn avg_inefficiency(sets: &[LabelSet]) -> f64 {
    if sets.is_empty() {
        return 0.0;
    }
    sets.iter().map(|s| s.cardinality() as f64).sum::<f64>() / sets.len() as f64
}

/// Default type-2 probes: all singletons, plus all pairs when `K <= 5`.
pub fn default_probes(k: usize) -> Vec<LabelSet> {
    let mut probes: Vec<LabelSet> = (0..k).map(|label| LabelSet::singleton(label, k)).collect();
    if k <= 5 {
        for a in 0..k {
            for b in (a + 1)..k {
                probes.push(LabelSet::from_labels(&[a, b], k));
            }
        }
    }
    probes
}

/// The type-2 validity bound `delta / (1 - alpha)`.
pub fn type2_bound(delta: f64, alpha: f64) -> f64 {
    delta / (1.0 - alpha)
}

/// Empirical frequency, per probe set `A`, of the joint event
/// "upper probability of A is at most delta AND the realized label lies in
/// A". Compared by the harness against [`type2_bound`] plus binomial slack.
pub fn type2_validity_estimate(
    envelopes: &[ProbabilityEnvelope],
    true_labels: &[usize],
    delta: f64,
    probes: &[LabelSet],
) -> Result<BTreeMap<String, f64>> {
    if envelopes.len() != true_labels.len() {
        return Err(CredalError::LengthMismatch {
            left: envelopes.len(),
            right: true_labels.len(),
        });
    }
    if envelopes.is_empty() {
        return Err(CredalError::InvalidParameter {
            reason: "estimate over zero points".to_string(),
        });
    }
    let mut estimates = BTreeMap::new();
    for probe in probes {
        let mut hits = 0usize;
        for (env, &label) in envelopes.iter().zip(true_labels) {
            if probe.contains(label) && upper_probability(env, probe)? <= delta {
                hits += 1;
            }
        }
        estimates.insert(probe.to_string(), hits as f64 / envelopes.len() as f64);
    }
    Ok(estimates)
}

struct PointOutcome {
    covered: bool,
    empty_region: bool,
    ihds: LabelSet,
    prps: LabelSet,
    inclusion: bool,
    envelope: Option<ProbabilityEnvelope>,
    realized_label: usize,
    primary_nanos: u64,
}

fn realize_label(lambda: &ProbabilityVector, seed: u64, point_index: u64) -> usize {
    let mut rng = stream_rng(seed, SALT_LABEL, point_index);
    let u: f64 = rng.random();
    let mut cumulative = 0.0;
    for (label, &p) in lambda.entries().iter().enumerate() {
        cumulative += p;
        if u < cumulative {
            return label;
        }
    }
    lambda.k() - 1
}

fn run_point(
    config: &ExperimentConfig,
    record: &CalibrationRecord,
    tau: f64,
    seed: u64,
    point_index: u64,
) -> Result<PointOutcome> {
    let k = record.model_probs.k();
    let scores = conformity_scores(&record.model_probs);
    let realized_label = realize_label(&record.plausibility, seed, point_index);

    let start = Instant::now();
    let region = match CredalRegion::from_scores(scores, tau) {
        Ok(region) => region,
        Err(CredalError::EmptyRegion { .. }) => {
            // A test point less conformal than the calibration quantile on
            // every label: the region is empty, the point is uncovered, and
            // no label is predicted. Not an error.
            return Ok(PointOutcome {
                covered: false,
                empty_region: true,
                ihds: LabelSet::empty(k),
                prps: LabelSet::empty(k),
                inclusion: true,
                envelope: None,
                realized_label,
                primary_nanos: start.elapsed().as_nanos() as u64,
            });
        }
        Err(e) => return Err(e.for_point(&record.id)),
    };
    let envelope = region.envelope();
    let ihds = ihds_algorithm1(&envelope, config.delta, config.k_cap)
        .map_err(|e| e.for_point(&record.id))?;
    let primary_nanos = start.elapsed().as_nanos() as u64;

    let baseline = prps(&region, config.delta, config.resolution)
        .map_err(|e| e.for_point(&record.id))?;
    let covered = region
        .contains(&record.plausibility)
        .map_err(|e| e.for_point(&record.id))?;

    Ok(PointOutcome {
        covered,
        empty_region: false,
        inclusion: ihds.set.is_subset_of(&baseline.set),
        ihds: ihds.set,
        prps: baseline.set,
        envelope: Some(envelope),
        realized_label,
        primary_nanos,
    })
}

fn run_seed(
    config: &ExperimentConfig,
    records: &[CalibrationRecord],
    seed: u64,
) -> Result<SeedMetrics> {
    let n = records.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut stream_rng(seed, SALT_SHUFFLE, 0));
    let n_calibration = ((n as f64 * config.split_fraction).floor() as usize).clamp(1, n - 1);
    let (calibration_idx, test_idx) = order.split_at(n_calibration);

    let calibration: Vec<CalibrationRecord> = calibration_idx
        .iter()
        .map(|&i| records[i].clone())
        .collect();
    let threshold = calibrate(&calibration, config.alpha)?;
    let tau = threshold.tau();

    let outcomes: Vec<PointOutcome> = test_idx
        .par_iter()
        .map(|&i| run_point(config, &records[i], tau, seed, i as u64))
        .collect::<Result<Vec<_>>>()?;

    let n_test = outcomes.len() as f64;
    let lambdas: Vec<&ProbabilityVector> =
        test_idx.iter().map(|&i| &records[i].plausibility).collect();

    let covered = outcomes.iter().filter(|o| o.covered).count() as f64 / n_test;
    let ihds_label_coverage = outcomes
        .iter()
        .zip(&lambdas)
        .map(|(o, l)| o.ihds.sum_over(l.entries()))
        .sum::<f64>()
        / n_test;
    let prps_label_coverage = outcomes
        .iter()
        .zip(&lambdas)
        .map(|(o, l)| o.prps.sum_over(l.entries()))
        .sum::<f64>()
        / n_test;
    let ihds_inefficiency =
        outcomes.iter().map(|o| o.ihds.cardinality() as f64).sum::<f64>() / n_test;
    let prps_inefficiency =
        outcomes.iter().map(|o| o.prps.cardinality() as f64).sum::<f64>() / n_test;
    let inclusion = outcomes.iter().filter(|o| o.inclusion).count() as f64 / n_test;
    let empty_regions = outcomes.iter().filter(|o| o.empty_region).count();

    let k = records[0].plausibility.k();
    let probes = default_probes(k);
    let mut type2 = BTreeMap::new();
    for probe in &probes {
        let mut hits = 0usize;
        for outcome in &outcomes {
            let in_probe = probe.contains(outcome.realized_label);
            let small_upper = match &outcome.envelope {
                Some(env) => upper_probability(env, probe)? <= config.delta,
                // empty region: the upper probability is a supremum over
                // nothing, below any threshold
                None => true,
            };
            if in_probe && small_upper {
                hits += 1;
            }
        }
        type2.insert(probe.to_string(), hits as f64 / n_test);
    }

    let mut times: Vec<u64> = outcomes.iter().map(|o| o.primary_nanos).collect();
    times.sort_unstable();
    let median_point_ms = times[times.len() / 2] as f64 / 1e6;

    Ok(SeedMetrics {
        seed,
        distribution_coverage: covered,
        ihds_label_coverage,
        ihds_inefficiency,
        prps_label_coverage,
        prps_inefficiency,
        ihds_in_prps_fraction: inclusion,
        empty_regions,
        type2,
        median_point_ms,
    })
}

/// Run the full protocol: for each seed, shuffle/split/calibrate/predict,
/// then aggregate means and standard deviations across seeds.
///
/// Genuine per-point failures abort with the point id attached; an empty
/// region is a defined outcome (uncovered, empty prediction sets), not a
/// failure.
pub fn run_experiment(
    config: &ExperimentConfig,
    records: &[CalibrationRecord],
) -> Result<MetricsReport> {
    config.validate()?;
    if records.len() < 2 {
        return Err(CredalError::InvalidParameter {
            reason: format!("need at least 2 records to split, got {}", records.len()),
        });
    }

    let per_seed: Vec<SeedMetrics> = config
        .seeds
        .par_iter()
        .map(|&seed| run_seed(config, records, seed))
        .collect::<Result<Vec<_>>>()?;

    let collect = |f: fn(&SeedMetrics) -> f64| -> Vec<f64> { per_seed.iter().map(f).collect() };
    let distribution = summarize(&collect(|s| s.distribution_coverage));
    let ihds = MethodSummary {
        label_coverage: summarize(&collect(|s| s.ihds_label_coverage)),
        avg_inefficiency: summarize(&collect(|s| s.ihds_inefficiency)),
    };
    let prps = MethodSummary {
        label_coverage: summarize(&collect(|s| s.prps_label_coverage)),
        avg_inefficiency: summarize(&collect(|s| s.prps_inefficiency)),
    };
    let inclusion = collect(|s| s.ihds_in_prps_fraction);
    let inclusion_mean = inclusion.iter().sum::<f64>() / inclusion.len() as f64;

    let mut type2_estimates: BTreeMap<String, f64> = BTreeMap::new();
    for seed_metrics in &per_seed {
        for (probe, value) in &seed_metrics.type2 {
            *type2_estimates.entry(probe.clone()).or_insert(0.0) += value;
        }
    }
    for value in type2_estimates.values_mut() {
        *value /= per_seed.len() as f64;
    }

    let mut medians: Vec<f64> = per_seed.iter().map(|s| s.median_point_ms).collect();
    medians.sort_by(|a, b| a.total_cmp(b));
    let runtime_per_point_ms = medians[medians.len() / 2];

    Ok(MetricsReport {
        epsilon: config.epsilon,
        alpha: config.alpha,
        delta: config.delta,
        n_records: records.len(),
        distribution_coverage: distribution,
        ihds,
        prps,
        ihds_in_prps_fraction: inclusion_mean,
        empty_regions: per_seed.iter().map(|s| s.empty_regions).sum(),
        type2_estimates,
        type2_bound: type2_bound(config.delta, config.alpha),
        runtime_per_point_ms,
        per_seed,
    })
}

/// One cell of the alpha/delta trade-off grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridRow {
    pub epsilon: f64,
    pub alpha: f64,
    pub delta: f64,
    pub distribution_coverage: f64,
    pub ihds_label_coverage: f64,
    pub ihds_inefficiency: f64,
    pub prps_inefficiency: f64,
}

/// For each epsilon, sweep alpha over an interior grid with spacing
/// `epsilon / grid_steps`, derive delta from the budget constraint, run the
/// experiment, and tabulate inefficiencies.
pub fn alpha_delta_grid(
    records: &[CalibrationRecord],
    epsilons: &[f64],
    grid_steps: usize,
    template: &ExperimentConfig,
) -> Result<Vec<GridRow>> {
    if grid_steps < 2 {
        return Err(CredalError::InvalidParameter {
            reason: format!("grid needs at least 2 steps, got {grid_steps}"),
        });
    }
    let mut rows = Vec::new();
    for &epsilon in epsilons {
        for i in 1..grid_steps {
            let alpha = epsilon * i as f64 / grid_steps as f64;
            let config = ExperimentConfig {
                epsilon,
                alpha,
                delta: derived_delta(epsilon, alpha),
                ..template.clone()
            };
            let report = run_experiment(&config, records)?;
            rows.push(GridRow {
                epsilon,
                alpha,
                delta: config.delta,
                distribution_coverage: report.distribution_coverage.mean,
                ihds_label_coverage: report.ihds.label_coverage.mean,
                ihds_inefficiency: report.ihds.avg_inefficiency.mean,
                prps_inefficiency: report.prps.avg_inefficiency.mean,
            });
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calibration::ConformityScores;
    use crate::synthetic::{generate_synthetic, GeneratorSpec};

    fn pv(entries: &[f64]) -> ProbabilityVector {
        ProbabilityVector::new(entries.to_vec()).unwrap()
    }

    fn region(scores: &[f64], tau: f64) -> CredalRegion {
        CredalRegion::from_scores(ConformityScores::new(scores.to_vec()).unwrap(), tau).unwrap()
    }

    #[test]
    fn distribution_coverage_fixtures() {
        let vacuous = vec![
            region(&[0.5, 0.3, 0.2], f64::NEG_INFINITY),
            region(&[0.1, 0.8, 0.1], f64::NEG_INFINITY),
        ];
        let lambdas = vec![pv(&[0.2, 0.5, 0.3]), pv(&[1.0, 0.0, 0.0])];
        assert_eq!(distribution_coverage(&vacuous, &lambdas).unwrap(), 1.0);

        // one region containing its lambda, one not
        let mixed = vec![region(&[0.7, 0.2, 0.1], 0.25), region(&[0.7, 0.2, 0.1], 0.65)];
        let lambdas = vec![pv(&[0.5, 0.3, 0.2]), pv(&[0.5, 0.3, 0.2])];
        assert_eq!(distribution_coverage(&mixed, &lambdas).unwrap(), 0.5);

        assert!(distribution_coverage(&mixed, &lambdas[..1]).is_err());
    }

    #[test]
    fn label_coverage_fixtures() {
        let lambdas = vec![pv(&[0.6, 0.3, 0.1])];
        let full = label_coverage(&[LabelSet::full(3)], &lambdas).unwrap();
        assert!((full - 1.0).abs() < 1e-12);
        assert_eq!(label_coverage(&[LabelSet::empty(3)], &lambdas).unwrap(), 0.0);
        let single = label_coverage(&[LabelSet::singleton(0, 3)], &lambdas).unwrap();
        assert!((single - 0.6).abs() < 1e-12);
    }

    #[test]
    fn avg_inefficiency_fixtures() {
        let sets = vec![
            LabelSet::singleton(0, 3),
            LabelSet::from_labels(&[0, 1], 3),
            LabelSet::full(3),
        ];
        assert_eq!(avg_inefficiency(&sets), 2.0);
        assert_eq!(avg_inefficiency(&[LabelSet::singleton(1, 3); 4]), 1.0);
        assert_eq!(avg_inefficiency(&[LabelSet::full(3); 2]), 3.0);
    }

    #[test]
    fn type2_estimate_fixtures() {
        let env = region(&[0.7, 0.2, 0.1], 0.25).envelope();
        let envelopes = vec![env.clone(), env];
        let labels = vec![0usize, 2usize];

        // with delta = 0, no probe has upper probability <= 0
        let probes = default_probes(3);
        let estimates = type2_validity_estimate(&envelopes, &labels, 0.0, &probes).unwrap();
        assert!(estimates.values().all(|&v| v == 0.0));

        // empty probe never contains the label
        let empty = vec![LabelSet::empty(3)];
        let estimates = type2_validity_estimate(&envelopes, &labels, 1.0, &empty).unwrap();
        assert_eq!(estimates["{}"], 0.0);

        // delta = 1: the event reduces to label membership
        let singleton = vec![LabelSet::singleton(0, 3)];
        let estimates = type2_validity_estimate(&envelopes, &labels, 1.0, &singleton).unwrap();
        assert_eq!(estimates["{0}"], 0.5);
        assert!(type2_bound(1.0, 0.05) >= 1.0);
    }

    #[test]
    fn type2_bound_reference_values() {
        // 0.5 / 0.95 = 0.5263...; at delta = alpha = 0.05 the bound is a
        // tenth of that.
        assert!((type2_bound(0.5, 0.05) - 0.526).abs() < 5e-4);
        assert!((type2_bound(0.05, 0.05) - 0.0526).abs() < 5e-5);
    }

    #[test]
    fn derived_delta_fixtures() {
        let d = derived_delta(0.2, 0.02);
        assert!((d - (1.0 - 0.8 / 0.98)).abs() < 1e-15);
        assert!((d - 0.18367).abs() < 1e-5);

        // alpha -> 0 pushes delta -> epsilon
        assert!((derived_delta(0.2, 1e-12) - 0.2).abs() < 1e-9);

        // symmetric point: alpha = delta = 1 - sqrt(1 - eps)
        let eps = 0.19;
        let sym = 1.0 - (1.0f64 - eps).sqrt();
        assert!((derived_delta(eps, sym) - sym).abs() < 1e-12);
    }

    #[test]
    fn default_probes_structure() {
        let probes = default_probes(3);
        assert_eq!(probes.len(), 6); // 3 singletons + 3 pairs
        let probes = default_probes(6);
        assert_eq!(probes.len(), 6); // singletons only past K=5
    }

    #[test]
    fn config_validation() {
        assert!(ExperimentConfig::half_half(0.1, 3).is_ok());
        assert!(ExperimentConfig::half_half(0.0, 3).is_err());
        assert!(ExperimentConfig::half_half(1.0, 3).is_err());
        assert!(ExperimentConfig::with_alpha(0.2, 0.25, 3).is_err()); // alpha >= epsilon

        let mut config = ExperimentConfig::half_half(0.1, 3).unwrap();
        config.seeds.clear();
        assert!(config.validate().is_err());
    }

    fn small_dataset() -> Vec<CalibrationRecord> {
        generate_synthetic(&GeneratorSpec::default_for(3).unwrap(), 240, 42)
            .unwrap()
            .records
    }

    #[test]
    fn experiment_is_seed_deterministic() {
        let records = small_dataset();
        let mut config = ExperimentConfig::half_half(0.2, 3).unwrap();
        config.seeds = vec![0, 1, 2];
        config.resolution = 40;

        let a = run_experiment(&config, &records).unwrap();
        let b = run_experiment(&config, &records).unwrap();
        assert_eq!(a.distribution_coverage.mean, b.distribution_coverage.mean);
        assert_eq!(a.ihds.label_coverage.mean, b.ihds.label_coverage.mean);
        assert_eq!(a.ihds.avg_inefficiency.mean, b.ihds.avg_inefficiency.mean);
        assert_eq!(a.prps.avg_inefficiency.mean, b.prps.avg_inefficiency.mean);
        assert_eq!(a.type2_estimates, b.type2_estimates);
        for (x, y) in a.per_seed.iter().zip(&b.per_seed) {
            assert_eq!(x.distribution_coverage, y.distribution_coverage);
            assert_eq!(x.ihds_inefficiency, y.ihds_inefficiency);
        }
    }

    #[test]
    fn experiment_smoke_metrics_in_range() {
        let records = small_dataset();
        let mut config = ExperimentConfig::half_half(0.2, 3).unwrap();
        config.seeds = vec![0, 1, 2, 3];
        config.resolution = 40;

        let report = run_experiment(&config, &records).unwrap();
        // broad sanity bands; the acceptance suite asserts the tight ones
        assert!(report.distribution_coverage.mean >= 1.0 - config.alpha - 0.12);
        assert!(report.distribution_coverage.mean <= 1.0);
        assert!(report.ihds.label_coverage.mean >= (1.0 - config.alpha) * (1.0 - config.delta) - 0.12);
        assert!(report.ihds.avg_inefficiency.mean <= report.prps.avg_inefficiency.mean + 1e-9);
        assert_eq!(report.ihds_in_prps_fraction, 1.0);
        assert!(report.ihds.avg_inefficiency.mean >= 1.0);
        assert!(report.prps.avg_inefficiency.mean <= 3.0);
    }

    #[test]
    fn nested_region_audit_on_seed_averages() {
        // Growing the miscoverage budget (alpha and delta together) shrinks
        // the regions and the prediction sets: seed-averaged distribution
        // coverage and IHDS inefficiency both trend down.
        let records = small_dataset();
        let mut previous: Option<(f64, f64)> = None;
        for epsilon in [0.1, 0.2, 0.3] {
            let mut config = ExperimentConfig::half_half(epsilon, 3).unwrap();
            config.seeds = (0..6).collect();
            config.resolution = 40;
            let report = run_experiment(&config, &records).unwrap();
            let current = (
                report.distribution_coverage.mean,
                report.ihds.avg_inefficiency.mean,
            );
            if let Some((coverage, inefficiency)) = previous {
                assert!(current.0 <= coverage + 1e-9, "coverage not weakly decreasing");
                assert!(current.1 <= inefficiency + 1e-9, "inefficiency not weakly decreasing");
            }
            previous = Some(current);
        }
    }

    #[test]
    fn grid_rows_cover_the_sweep() {
        let records = small_dataset();
        let mut template = ExperimentConfig::half_half(0.2, 3).unwrap();
        template.seeds = vec![0, 1];
        template.resolution = 30;

        let rows = alpha_delta_grid(&records, &[0.1, 0.2], 4, &template).unwrap();
        assert_eq!(rows.len(), 6); // 2 epsilons x 3 interior alphas
        for row in &rows {
            assert!(row.alpha > 0.0 && row.alpha < row.epsilon);
            let budget = (1.0 - row.alpha) * (1.0 - row.delta);
            assert!((budget - (1.0 - row.epsilon)).abs() < 1e-12);
            assert!(row.ihds_inefficiency <= row.prps_inefficiency + 1e-9);
        }

        assert!(alpha_delta_grid(&records, &[0.1], 1, &template).is_err());
    }
}
