//! Synthetic ambiguous-ground-truth data.
//!
//! Features are drawn from a 2-D Gaussian mixture with one component per
//! label. The plausibility vector of each record is the *exact* mixture
//! posterior at the sampled feature point, so the true label distribution is
//! known by construction; the model probabilities are a temperature-smoothed
//! copy of that posterior, giving a realistic-but-imperfect classifier.
//! Everything is reproducible from the seed, with one RNG stream per record
//! so parallel consumers cannot perturb the draws.

use crate::calibration::CalibrationRecord;
use crate::error::{CredalError, Result};
use crate::simplex::ProbabilityVector;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

/// splitmix64 finalizer; used to derive independent RNG streams from
/// (seed, salt, index) triples.
pub(crate) fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// A deterministic per-(seed, salt, index) RNG stream.
pub(crate) fn stream_rng(seed: u64, salt: u64, index: u64) -> ChaCha12Rng {
    ChaCha12Rng::seed_from_u64(mix64(seed ^ mix64(salt.wrapping_add(index))))
}

const SALT_SAMPLE: u64 = 0x53_59_4E_54_48;

/// Parameters of the Gaussian-mixture generator: one isotropic 2-D component
/// per label.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub means: Vec<[f64; 2]>,
    /// Isotropic standard deviation per component; all must be positive.
    pub sigmas: Vec<f64>,
    /// Class priors; must sum to 1.
    pub priors: Vec<f64>,
    /// Model logits are divided by this before renormalization; 1 leaves
    /// the model equal to the posterior.
    pub temperature: f64,
}

impl GeneratorSpec {
    /// Components evenly spaced on the unit circle with overlapping spread,
    /// uniform priors, and mild smoothing (temperature 1.5).
    pub fn default_for(k: usize) -> Result<Self> {
        if k < 2 {
            return Err(CredalError::InvalidSpec {
                reason: format!("need at least 2 components, got {k}"),
            });
        }
        let means = (0..k)
            .map(|j| {
                let angle = 2.0 * std::f64::consts::PI * j as f64 / k as f64;
                [angle.cos(), angle.sin()]
            })
            .collect();
        Ok(GeneratorSpec {
            means,
            sigmas: vec![0.8; k],
            priors: vec![1.0 / k as f64; k],
            temperature: 1.5,
        })
    }

    pub fn k(&self) -> usize {
        self.means.len()
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.means.len();
        if k < 2 {
            return Err(CredalError::InvalidSpec {
                reason: "need at least 2 components".to_string(),
            });
        }
        if self.sigmas.len() != k || self.priors.len() != k {
            return Err(CredalError::InvalidSpec {
                reason: format!(
                    "inconsistent component counts: {} means, {} sigmas, {} priors",
                    k,
                    self.sigmas.len(),
                    self.priors.len()
                ),
            });
        }
        if self.sigmas.iter().any(|&s| s <= 0.0 || s.is_nan()) {
            return Err(CredalError::InvalidSpec {
                reason: "sigmas must be positive".to_string(),
            });
        }
        if self.priors.iter().any(|&p| p < 0.0) {
            return Err(CredalError::InvalidSpec {
                reason: "priors must be nonnegative".to_string(),
            });
        }
        let total: f64 = self.priors.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(CredalError::InvalidSpec {
                reason: format!("priors sum to {total}, expected 1"),
            });
        }
        if self.temperature <= 0.0 || self.temperature.is_nan() {
            return Err(CredalError::InvalidSpec {
                reason: "temperature must be positive".to_string(),
            });
        }
        Ok(())
    }

    /// Exact mixture posterior at feature point `x`.
    fn posterior(&self, x: [f64; 2]) -> Vec<f64> {
        let k = self.k();
        let mut log_weights = Vec::with_capacity(k);
        for j in 0..k {
            let dx = x[0] - self.means[j][0];
            let dy = x[1] - self.means[j][1];
            let variance = self.sigmas[j] * self.sigmas[j];
            let log_density = -(dx * dx + dy * dy) / (2.0 * variance) - variance.ln();
            let log_prior = if self.priors[j] > 0.0 {
                self.priors[j].ln()
            } else {
                f64::NEG_INFINITY
            };
            log_weights.push(log_prior + log_density);
        }
        normalize_log_weights(&log_weights)
    }

    /// Temperature-smoothed copy of the posterior (`p ~ lambda^(1/t)`).
    fn smooth(&self, posterior: &[f64]) -> Vec<f64> {
        if self.temperature == 1.0 {
            return posterior.to_vec();
        }
        let log_weights: Vec<f64> = posterior
            .iter()
            .map(|&p| {
                if p > 0.0 {
                    p.ln() / self.temperature
                } else {
                    f64::NEG_INFINITY
                }
            })
            .collect();
        normalize_log_weights(&log_weights)
    }
}

fn normalize_log_weights(log_weights: &[f64]) -> Vec<f64> {
    let max = log_weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = log_weights.iter().map(|lw| (lw - max).exp()).collect();
    let total: f64 = weights.iter().sum();
    weights.iter().map(|w| w / total).collect()
}

/// A generated dataset: records whose plausibility is the exact generator
/// posterior at the sampled feature point.
#[derive(Debug, Clone)]
pub struct SyntheticDataset {
    pub records: Vec<CalibrationRecord>,
    pub generator_spec: GeneratorSpec,
    pub seed: u64,
}

/// Draw `n` records from the mixture, reproducibly from `seed`.
pub fn generate_synthetic(spec: &GeneratorSpec, n: usize, seed: u64) -> Result<SyntheticDataset> {
    spec.validate()?;
    if n == 0 {
        return Err(CredalError::InvalidSpec {
            reason: "need at least one record".to_string(),
        });
    }
    let mut records = Vec::with_capacity(n);
    for i in 0..n {
        let mut rng = stream_rng(seed, SALT_SAMPLE, i as u64);

        // component draw from the priors
        let u: f64 = rng.random();
        let mut component = spec.k() - 1;
        let mut cumulative = 0.0;
        for (j, &prior) in spec.priors.iter().enumerate() {
            cumulative += prior;
            if u < cumulative {
                component = j;
                break;
            }
        }

        let z0: f64 = StandardNormal.sample(&mut rng);
        let z1: f64 = StandardNormal.sample(&mut rng);
        let x = [
            spec.means[component][0] + spec.sigmas[component] * z0,
            spec.means[component][1] + spec.sigmas[component] * z1,
        ];

        let plausibility = spec.posterior(x);
        let model_probs = spec.smooth(&plausibility);
        records.push(CalibrationRecord::new(
            format!("synth-{i:06}"),
            ProbabilityVector::new(model_probs)?,
            ProbabilityVector::new(plausibility)?,
        )?);
    }
    Ok(SyntheticDataset {
        records,
        generator_spec: spec.clone(),
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generator_is_deterministic() {
        let spec = GeneratorSpec::default_for(3).unwrap();
        let a = generate_synthetic(&spec, 50, 7).unwrap();
        let b = generate_synthetic(&spec, 50, 7).unwrap();
        for (x, y) in a.records.iter().zip(&b.records) {
            assert_eq!(x.id, y.id);
            assert_eq!(x.model_probs.entries(), y.model_probs.entries());
            assert_eq!(x.plausibility.entries(), y.plausibility.entries());
        }

        let c = generate_synthetic(&spec, 50, 8).unwrap();
        let identical = a
            .records
            .iter()
            .zip(&c.records)
            .all(|(x, y)| x.plausibility.entries() == y.plausibility.entries());
        assert!(!identical, "different seeds should differ");
    }

    #[test]
    fn unit_temperature_copies_posterior() {
        let mut spec = GeneratorSpec::default_for(3).unwrap();
        spec.temperature = 1.0;
        let data = generate_synthetic(&spec, 30, 1).unwrap();
        for record in &data.records {
            assert_eq!(record.model_probs.entries(), record.plausibility.entries());
        }
    }

    #[test]
    fn indistinguishable_components_give_uniform_posterior() {
        let spec = GeneratorSpec {
            means: vec![[0.0, 0.0]; 3],
            sigmas: vec![1.0; 3],
            priors: vec![1.0 / 3.0; 3],
            temperature: 1.5,
        };
        let data = generate_synthetic(&spec, 10, 3).unwrap();
        for record in &data.records {
            for &p in record.plausibility.entries() {
                assert!((p - 1.0 / 3.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn smoothing_moves_toward_uniform() {
        let spec = GeneratorSpec::default_for(3).unwrap();
        let data = generate_synthetic(&spec, 200, 11).unwrap();
        for record in &data.records {
            let max_plaus = record
                .plausibility
                .entries()
                .iter()
                .copied()
                .fold(f64::NEG_INFINITY, f64::max);
            let max_model = record
                .model_probs
                .entries()
                .iter()
                .copied()
                .fold(f64::NEG_INFINITY, f64::max);
            assert!(max_model <= max_plaus + 1e-12);
        }
    }

    #[test]
    fn invalid_specs_are_rejected() {
        let mut spec = GeneratorSpec::default_for(3).unwrap();
        spec.sigmas[1] = 0.0;
        assert!(matches!(
            generate_synthetic(&spec, 5, 0),
            Err(CredalError::InvalidSpec { .. })
        ));

        let mut spec = GeneratorSpec::default_for(3).unwrap();
        spec.priors = vec![0.5, 0.2, 0.2];
        assert!(generate_synthetic(&spec, 5, 0).is_err());

        let spec = GeneratorSpec::default_for(3).unwrap();
        assert!(generate_synthetic(&spec, 0, 0).is_err());
    }
}
