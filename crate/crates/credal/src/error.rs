//! Error types shared across the crate.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, CredalError>;

/// Errors raised by calibration, region geometry, and prediction-set
/// construction.
#[derive(Debug, Error)]
pub enum CredalError {
    #[error("calibration set is empty")]
    EmptyCalibration,

    #[error("dimension mismatch: expected {expected} classes, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid probability vector: {reason}")]
    InvalidProbabilityVector { reason: String },

    #[error("invalid label space: {reason}")]
    InvalidLabelSpace { reason: String },

    #[error("credal region is empty: max conformity {max_score} < threshold {tau}")]
    EmptyRegion { max_score: f64, tau: f64 },

    #[error(
        "envelope violates sure-loss avoidance: sum(lower)={lower_sum}, sum(upper)={upper_sum}"
    )]
    SureLossViolation { lower_sum: f64, upper_sum: f64 },

    #[error("label space too large for subset enumeration: K={k} exceeds cap {cap}")]
    LabelSpaceTooLarge { k: usize, cap: usize },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("invalid generator spec: {reason}")]
    InvalidSpec { reason: String },

    #[error("unsupported dimension: operation requires K={required}, got K={got}")]
    UnsupportedDimension { required: usize, got: usize },

    #[error("invalid parameter: {reason}")]
    InvalidParameter { reason: String },

    #[error("dataset error at line {line}: {reason}")]
    Dataset { line: usize, reason: String },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("prediction failed for point {id}: {source}")]
    PointFailure {
        id: String,
        #[source]
        source: Box<CredalError>,
    },
}

impl CredalError {
    /// Attach the offending point id to an error propagating out of a
    /// per-point computation.
    pub fn for_point(self, id: &str) -> Self {
        CredalError::PointFailure {
            id: id.to_string(),
            source: Box::new(self),
        }
    }
}
