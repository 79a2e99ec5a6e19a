//! Conformal credal regions over class-probability simplices.
//!
//! Given calibration examples annotated with *plausibility vectors*
//! (categorical distributions over K labels, encoding ambiguous ground
//! truth) and a pre-trained classifier's probability outputs, this crate
//!
//! - calibrates a conformal threshold on plausibility scores
//!   ([`calibration`]),
//! - represents the induced credal region for a test point exactly, as a
//!   half-space cut of the simplex ([`region`]),
//! - derives label prediction sets from lower probabilities (the imprecise
//!   highest-density set and the plausibility-reduced baseline,
//!   [`prediction`]),
//! - decomposes total uncertainty into aleatoric and epistemic parts via
//!   lower/upper Shannon entropy ([`uncertainty`]),
//! - and reproduces the coverage / inefficiency experiments on synthetic
//!   data ([`experiment`], [`synthetic`]).
//!
//! File ingestion, persistence, and SVG rendering live in [`dataset`] and
//! [`render`]; the `credal` binary wires everything into a CLI.

pub mod calibration;
pub mod dataset;
pub mod error;
pub mod experiment;
pub mod prediction;
pub mod region;
pub mod render;
pub mod simplex;
pub mod synthetic;
pub mod uncertainty;

pub use calibration::{
    calibrate, calibrate_with, conformity_scores, plausibility_score, CalibratedThreshold,
    CalibrationRecord, ConformityFunction, ConformityScores, ModelConfidence,
};
pub use dataset::{CalibrationArtifact, Dataset, DatasetRow};
pub use error::{CredalError, Result};
pub use experiment::{
    alpha_delta_grid, avg_inefficiency, default_probes, derived_delta, distribution_coverage,
    label_coverage, run_experiment, type2_bound, type2_validity_estimate, ExperimentConfig,
    GridRow, MetricsReport,
};
pub use prediction::{
    exact_lower_probability, ihds_algorithm1, ihds_min_cardinality, lower_probability, prps,
    upper_probability, PredictionMethod, PredictionSetResult, DEFAULT_K_CAP,
};
pub use region::{default_resolution, CredalRegion, ExtremePoints, ProbabilityEnvelope};
pub use render::{render_ternary, write_ternary_svg};
pub use simplex::{
    descending_sort_permutation, highest_density_set, shannon_entropy, LabelSet, LabelSpace,
    ProbabilityVector,
};
pub use synthetic::{generate_synthetic, GeneratorSpec, SyntheticDataset};
pub use uncertainty::{
    vertex_entropy_bounds, decompose, lower_entropy, upper_entropy, VertexEntropyBounds, MaxEntropy,
    MaxEntropyRoute, UncertaintyReport,
};
