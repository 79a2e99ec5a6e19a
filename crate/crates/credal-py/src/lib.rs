//! Python bindings for the credal crate.
//!
//! Exposes calibration, region geometry, prediction sets, and the
//! uncertainty decomposition as plain functions and two small classes.
//! Probability vectors cross the boundary as Python lists of floats and
//! label sets as sorted lists of 0-indexed ints.

use credal::{
    calibrate, conformity_scores, decompose, highest_density_set, ihds_algorithm1,
    ihds_min_cardinality, lower_probability, plausibility_score, prps, render_ternary,
    shannon_entropy, upper_probability, ConformityScores, CredalError, CredalRegion, LabelSet,
    ProbabilityEnvelope, ProbabilityVector,
};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

fn to_py_err(error: CredalError) -> PyErr {
    PyValueError::new_err(error.to_string())
}

fn prob_vector(entries: Vec<f64>) -> PyResult<ProbabilityVector> {
    ProbabilityVector::new(entries).map_err(to_py_err)
}

fn label_set(labels: Vec<usize>, k: usize) -> PyResult<LabelSet> {
    if labels.iter().any(|&l| l >= k) {
        return Err(PyValueError::new_err(format!(
            "labels must be below {k}"
        )));
    }
    Ok(LabelSet::from_labels(&labels, k))
}

/// A calibrated conformal threshold.
#[pyclass(name = "Calibration")]
struct PyCalibration {
    tau: f64,
    alpha: f64,
    n: usize,
    quantile_index: usize,
}

#[pymethods]
impl PyCalibration {
    /// The threshold; `-inf` means the vacuous full-simplex region.
    #[getter]
    fn tau(&self) -> f64 {
        self.tau
    }

    #[getter]
    fn alpha(&self) -> f64 {
        self.alpha
    }

    #[getter]
    fn n(&self) -> usize {
        self.n
    }

    #[getter]
    fn quantile_index(&self) -> usize {
        self.quantile_index
    }

    fn __repr__(&self) -> String {
        format!(
            "Calibration(tau={}, alpha={}, n={})",
            self.tau, self.alpha, self.n
        )
    }
}

/// The credal region of one test point: the simplex cut by the half-space
/// of plausibility vectors whose score clears the threshold.
#[pyclass(name = "Region")]
struct PyRegion {
    inner: CredalRegion,
}

impl PyRegion {
    fn envelope_inner(&self) -> ProbabilityEnvelope {
        self.inner.envelope()
    }
}

#[pymethods]
impl PyRegion {
    #[new]
    fn new(scores: Vec<f64>, tau: f64) -> PyResult<Self> {
        let scores = ConformityScores::new(scores).map_err(to_py_err)?;
        let inner = CredalRegion::from_scores(scores, tau).map_err(to_py_err)?;
        Ok(PyRegion { inner })
    }

    #[getter]
    fn k(&self) -> usize {
        self.inner.k()
    }

    #[getter]
    fn tau(&self) -> f64 {
        self.inner.tau()
    }

    fn contains(&self, lam: Vec<f64>) -> PyResult<bool> {
        let lam = prob_vector(lam)?;
        self.inner.contains(&lam).map_err(to_py_err)
    }

    /// Per-label probability bounds as `(lower, upper)` lists.
    fn envelope(&self) -> (Vec<f64>, Vec<f64>) {
        let env = self.envelope_inner();
        (env.lower().to_vec(), env.upper().to_vec())
    }

    /// Exact polytope vertices.
    fn extreme_points(&self) -> Vec<Vec<f64>> {
        self.inner
            .extreme_points()
            .vertices()
            .iter()
            .map(|v| v.entries().to_vec())
            .collect()
    }

    /// Region members of the resolution-`m` simplex lattice.
    fn discretize(&self, resolution: usize) -> Vec<Vec<f64>> {
        self.inner
            .discretize(resolution)
            .iter()
            .map(|v| v.entries().to_vec())
            .collect()
    }

    /// Greedy IHDS: `(labels, lower_probability)`.
    #[pyo3(signature = (delta, k_cap = 20))]
    fn ihds(&self, delta: f64, k_cap: usize) -> PyResult<(Vec<usize>, f64)> {
        let result =
            ihds_algorithm1(&self.envelope_inner(), delta, k_cap).map_err(to_py_err)?;
        Ok((result.set.labels(), result.lower_probability))
    }

    /// Minimum-cardinality IHDS oracle: `(labels, lower_probability)`.
    fn ihds_min_cardinality(&self, delta: f64) -> PyResult<(Vec<usize>, f64)> {
        let result = ihds_min_cardinality(&self.envelope_inner(), delta).map_err(to_py_err)?;
        Ok((result.set.labels(), result.lower_probability))
    }

    /// Plausibility-reduced predictive set baseline.
    #[pyo3(signature = (delta, resolution = 200))]
    fn prps(&self, delta: f64, resolution: usize) -> PyResult<Vec<usize>> {
        let result = prps(&self.inner, delta, resolution).map_err(to_py_err)?;
        Ok(result.set.labels())
    }

    /// Lower probability of a label set under the region's envelope.
    fn lower_probability(&self, labels: Vec<usize>) -> PyResult<f64> {
        let set = label_set(labels, self.inner.k())?;
        lower_probability(&self.envelope_inner(), &set).map_err(to_py_err)
    }

    /// Upper probability of a label set under the region's envelope.
    fn upper_probability(&self, labels: Vec<usize>) -> PyResult<f64> {
        let set = label_set(labels, self.inner.k())?;
        upper_probability(&self.envelope_inner(), &set).map_err(to_py_err)
    }

    /// Uncertainty decomposition as `(total, aleatoric, epistemic)` bits.
    fn uncertainty(&self) -> PyResult<(f64, f64, f64)> {
        let report = decompose(&self.inner).map_err(to_py_err)?;
        Ok((
            report.upper_entropy,
            report.lower_entropy,
            report.epistemic,
        ))
    }

    /// Ternary SVG of the region (3-class only), with an optional marker.
    #[pyo3(signature = (marker = None))]
    fn svg(&self, marker: Option<Vec<f64>>) -> PyResult<String> {
        let marker = match marker {
            Some(entries) => Some(prob_vector(entries)?),
            None => None,
        };
        render_ternary(&self.inner, marker.as_ref()).map_err(to_py_err)
    }

    fn __repr__(&self) -> String {
        format!("Region(k={}, tau={})", self.inner.k(), self.inner.tau())
    }
}

/// Shannon entropy of a probability vector, in bits.
#[pyfunction(name = "shannon_entropy")]
fn py_shannon_entropy(p: Vec<f64>) -> PyResult<f64> {
    Ok(shannon_entropy(&prob_vector(p)?))
}

/// Precise highest-density set of `p` at level `1 - delta`.
#[pyfunction(name = "highest_density_set")]
fn py_highest_density_set(p: Vec<f64>, delta: f64) -> PyResult<Vec<usize>> {
    Ok(highest_density_set(&prob_vector(p)?, delta).labels())
}

/// The plausibility score `sum_k lambda_k * E_k`.
#[pyfunction(name = "plausibility_score")]
fn py_plausibility_score(scores: Vec<f64>, lam: Vec<f64>) -> PyResult<f64> {
    let scores = ConformityScores::new(scores).map_err(to_py_err)?;
    plausibility_score(&scores, &prob_vector(lam)?).map_err(to_py_err)
}

/// Calibrate a threshold from parallel lists of model probabilities and
/// plausibility vectors.
#[pyfunction(name = "calibrate")]
fn py_calibrate(
    model_probs: Vec<Vec<f64>>,
    plausibilities: Vec<Vec<f64>>,
    alpha: f64,
) -> PyResult<PyCalibration> {
    if model_probs.len() != plausibilities.len() {
        return Err(PyValueError::new_err(format!(
            "{} model rows vs {} plausibility rows",
            model_probs.len(),
            plausibilities.len()
        )));
    }
    let records = model_probs
        .into_iter()
        .zip(plausibilities)
        .enumerate()
        .map(|(i, (probs, lam))| {
            credal::CalibrationRecord::new(
                format!("py-{i}"),
                prob_vector(probs)?,
                prob_vector(lam)?,
            )
            .map_err(to_py_err)
        })
        .collect::<PyResult<Vec<_>>>()?;
    let threshold = calibrate(&records, alpha).map_err(to_py_err)?;
    Ok(PyCalibration {
        tau: threshold.tau(),
        alpha: threshold.alpha(),
        n: threshold.n_calibration(),
        quantile_index: threshold.quantile_index(),
    })
}

/// Region for a test point's model probabilities under a calibration
/// (identity conformity: scores are the probabilities themselves).
#[pyfunction(name = "region_for")]
fn py_region_for(calibration: &PyCalibration, model_probs: Vec<f64>) -> PyResult<PyRegion> {
    let scores = conformity_scores(&prob_vector(model_probs)?);
    let inner = CredalRegion::from_scores(scores, calibration.tau).map_err(to_py_err)?;
    Ok(PyRegion { inner })
}

#[pymodule]
fn credal_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyCalibration>()?;
    m.add_class::<PyRegion>()?;
    m.add_function(wrap_pyfunction!(py_shannon_entropy, m)?)?;
    m.add_function(wrap_pyfunction!(py_highest_density_set, m)?)?;
    m.add_function(wrap_pyfunction!(py_plausibility_score, m)?)?;
    m.add_function(wrap_pyfunction!(py_calibrate, m)?)?;
    m.add_function(wrap_pyfunction!(py_region_for, m)?)?;
    Ok(())
}
