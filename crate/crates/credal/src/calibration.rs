//! Split-conformal calibration of plausibility scores.
//!
//! A calibration example pairs the classifier's probability output `p` with
//! an annotated plausibility vector `lambda`. Its plausibility score is the
//! lambda-weighted average of per-label conformity scores,
//! `e = sum_k lambda_k * E_k`, and the threshold `tau` is the
//! `floor(alpha * (n+1))`-th smallest calibration score. Under
//! exchangeability, a fresh pair's score falls at or above `tau` with
//! probability at least `1 - alpha`.

use crate::error::{CredalError, Result};
use crate::simplex::ProbabilityVector;
use serde::{Deserialize, Serialize};

/// One calibration example: the model's probability estimate and the
/// annotated plausibility vector, with matching dimension.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CalibrationRecord {
    pub id: String,
    pub model_probs: ProbabilityVector,
    pub plausibility: ProbabilityVector,
}

impl CalibrationRecord {
    pub fn new(
        id: impl Into<String>,
        model_probs: ProbabilityVector,
        plausibility: ProbabilityVector,
    ) -> Result<Self> {
        if model_probs.k() != plausibility.k() {
            return Err(CredalError::DimensionMismatch {
                expected: model_probs.k(),
                got: plausibility.k(),
            });
        }
        Ok(CalibrationRecord {
            id: id.into(),
            model_probs,
            plausibility,
        })
    }
}

/// Per-label conformity scores `E(x, k)` for one input.
///
/// Higher means more conformal; the credal region keeps `e >= tau`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConformityScores {
    per_label: Vec<f64>,
}

impl ConformityScores {
    pub fn new(per_label: Vec<f64>) -> Result<Self> {
        if per_label.iter().any(|s| !s.is_finite()) {
            return Err(CredalError::InvalidParameter {
                reason: "conformity scores must be finite".to_string(),
            });
        }
        Ok(ConformityScores { per_label })
    }

    pub fn k(&self) -> usize {
        self.per_label.len()
    }

    pub fn per_label(&self) -> &[f64] {
        &self.per_label
    }

    pub fn get(&self, label: usize) -> f64 {
        self.per_label[label]
    }

    pub fn max(&self) -> f64 {
        self.per_label.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Largest score among labels other than `label`.
    pub fn max_excluding(&self, label: usize) -> f64 {
        self.per_label
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != label)
            .map(|(_, &s)| s)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// A conformity function maps model probabilities to per-label scores.
/// Alternatives can be plugged in behind the same signature; calibration
/// and region construction only see the resulting [`ConformityScores`].
pub trait ConformityFunction: Sync {
    fn scores(&self, model_probs: &ProbabilityVector) -> ConformityScores;
    /// Stable identifier recorded in calibration artifacts.
    fn id(&self) -> &'static str;
}

/// The default conformity function: identity on model probabilities,
/// `E(x, k) = p_k(x)` (classifier confidence).
#[derive(Debug, Clone, Copy, Default)]
pub struct ModelConfidence;

impl ConformityFunction for ModelConfidence {
    fn scores(&self, model_probs: &ProbabilityVector) -> ConformityScores {
        ConformityScores {
            per_label: model_probs.entries().to_vec(),
        }
    }

    fn id(&self) -> &'static str {
        "model-confidence"
    }
}

/// Per-label conformity scores under the default conformity function.
pub fn conformity_scores(model_probs: &ProbabilityVector) -> ConformityScores {
    ModelConfidence.scores(model_probs)
}

/// The plausibility score `e = sum_k lambda_k * E_k`; linear in `lambda`.
pub fn plausibility_score(scores: &ConformityScores, lambda: &ProbabilityVector) -> Result<f64> {
    if scores.k() != lambda.k() {
        return Err(CredalError::DimensionMismatch {
            expected: scores.k(),
            got: lambda.k(),
        });
    }
    Ok(lambda.dot(scores.per_label()))
}

/// A calibrated conformal threshold.
///
/// `tau` is the `floor(alpha * (n+1))`-th smallest calibration score, or
/// `-inf` when that index underflows to zero (every score-quantile request
/// below `1/(n+1)` yields the vacuous full-simplex region).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CalibratedThreshold {
    tau: f64,
    alpha: f64,
    n_calibration: usize,
    /// Sorted calibration scores, kept when requested for diagnostics.
    score_trace: Option<Vec<f64>>,
}

impl CalibratedThreshold {
    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn n_calibration(&self) -> usize {
        self.n_calibration
    }

    pub fn score_trace(&self) -> Option<&[f64]> {
        self.score_trace.as_deref()
    }

    /// The 1-indexed order-statistic index `floor(alpha * (n+1))`; 0 means
    /// the threshold underflowed to `-inf`.
    pub fn quantile_index(&self) -> usize {
        quantile_index(self.alpha, self.n_calibration)
    }

    /// Reassemble a threshold from persisted fields (artifact loading).
    pub fn from_parts(tau: f64, alpha: f64, n_calibration: usize) -> Self {
        CalibratedThreshold {
            tau,
            alpha,
            n_calibration,
            score_trace: None,
        }
    }
}

fn quantile_index(alpha: f64, n: usize) -> usize {
    (alpha * (n + 1) as f64).floor() as usize
}

/// Calibrate the conformal threshold on `records` at miscoverage `alpha`.
///
/// Computes each record's plausibility score under `conformity`, then takes
/// the `floor(alpha * (n+1))`-th smallest as `tau` (ties kept). An index of
/// zero maps to the `-inf` sentinel.
pub fn calibrate_with(
    records: &[CalibrationRecord],
    alpha: f64,
    conformity: &dyn ConformityFunction,
    keep_trace: bool,
) -> Result<CalibratedThreshold> {
    if records.is_empty() {
        return Err(CredalError::EmptyCalibration);
    }
    if !(0.0..=1.0).contains(&alpha) {
        return Err(CredalError::InvalidParameter {
            reason: format!("alpha must be in [0,1], got {alpha}"),
        });
    }
    let k = records[0].model_probs.k();
    let mut scores = Vec::with_capacity(records.len());
    for record in records {
        if record.model_probs.k() != k || record.plausibility.k() != k {
            return Err(CredalError::DimensionMismatch {
                expected: k,
                got: record.model_probs.k().max(record.plausibility.k()),
            });
        }
        let e = plausibility_score(&conformity.scores(&record.model_probs), &record.plausibility)?;
        scores.push(e);
    }
    scores.sort_by(|a, b| a.partial_cmp(b).expect("scores are finite"));

    let n = scores.len();
    // alpha = 1 gives index n+1, past the last order statistic; clamp to n.
    let index = quantile_index(alpha, n).min(n);
    let tau = if index >= 1 {
        scores[index - 1]
    } else {
        f64::NEG_INFINITY
    };
    Ok(CalibratedThreshold {
        tau,
        alpha,
        n_calibration: n,
        score_trace: keep_trace.then_some(scores),
    })
}

/// [`calibrate_with`] under the default conformity function, without a
/// score trace.
pub fn calibrate(records: &[CalibrationRecord], alpha: f64) -> Result<CalibratedThreshold> {
    calibrate_with(records, alpha, &ModelConfidence, false)
}
