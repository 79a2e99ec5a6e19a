//! Dataset files, calibration artifacts, and their wire formats.
//!
//! Datasets are JSON lines: a header object
//! `{"schema":"credal-v1","k":K,"names":[...]}` followed by one object per
//! example with `id`, `model_probs`, optional `plausibility`, and optional
//! realized `label`. Floats are written with 17 significant digits so every
//! `f64` round-trips bit-exactly, and field order is fixed so identical
//! inputs emit identical bytes.

use crate::calibration::{CalibratedThreshold, CalibrationRecord};
use crate::error::{CredalError, Result};
use crate::simplex::{LabelSpace, ProbabilityVector};
use sha2::{Digest, Sha256};
use std::fmt::Write as _;
use std::path::Path;

/// Schema tag of dataset files.
pub const DATASET_SCHEMA: &str = "credal-v1";

/// Schema tag of calibration artifacts.
pub const ARTIFACT_SCHEMA: &str = "credal-calibration-v1";

/// 17 significant digits: enough to reproduce any f64 exactly.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Lowercase hex SHA-256 of raw bytes.
pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut out = String::with_capacity(64);
    for byte in digest {
        let _ = write!(out, "{byte:02x}");
    }
    out
}

/// Write-then-rename so readers never observe a partial file.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let tmp = path.with_extension(format!("tmp{}", std::process::id()));
    std::fs::write(&tmp, contents)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

fn json_string(s: &str) -> String {
    serde_json::to_string(s).expect("strings always serialize")
}

fn float_array(values: &[f64]) -> String {
    let mut out = String::from("[");
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        out.push_str(&fmt_f64(*v));
    }
    out.push(']');
    out
}

/// One dataset row. `plausibility` is required for calibration and
/// evaluation inputs but may be absent in pure-prediction inputs.
#[derive(Debug, Clone)]
pub struct DatasetRow {
    pub id: String,
    pub model_probs: ProbabilityVector,
    pub plausibility: Option<ProbabilityVector>,
    pub label: Option<usize>,
}

/// An in-memory dataset file: label space plus rows.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub label_space: LabelSpace,
    pub rows: Vec<DatasetRow>,
}

impl Dataset {
    pub fn new(label_space: LabelSpace, rows: Vec<DatasetRow>) -> Result<Self> {
        for (i, row) in rows.iter().enumerate() {
            validate_row(row, label_space.k()).map_err(|reason| CredalError::Dataset {
                line: i + 2,
                reason,
            })?;
        }
        Ok(Dataset { label_space, rows })
    }

    pub fn from_records(label_space: LabelSpace, records: &[CalibrationRecord]) -> Result<Self> {
        let rows = records
            .iter()
            .map(|r| DatasetRow {
                id: r.id.clone(),
                model_probs: r.model_probs.clone(),
                plausibility: Some(r.plausibility.clone()),
                label: None,
            })
            .collect();
        Dataset::new(label_space, rows)
    }

    pub fn k(&self) -> usize {
        self.label_space.k()
    }

    /// Parse the JSON-lines format; errors carry 1-indexed line numbers.
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, header_line) = lines.next().ok_or(CredalError::Dataset {
            line: 1,
            reason: "missing header line".to_string(),
        })?;
        let header: serde_json::Value =
            serde_json::from_str(header_line).map_err(|e| CredalError::Dataset {
                line: 1,
                reason: format!("invalid header JSON: {e}"),
            })?;
        if header.get("schema").and_then(|v| v.as_str()) != Some(DATASET_SCHEMA) {
            return Err(CredalError::Dataset {
                line: 1,
                reason: format!("expected schema {DATASET_SCHEMA:?}"),
            });
        }
        let k = header
            .get("k")
            .and_then(|v| v.as_u64())
            .ok_or(CredalError::Dataset {
                line: 1,
                reason: "header is missing the class count \"k\"".to_string(),
            })? as usize;
        let label_space = match header.get("names").and_then(|v| v.as_array()) {
            Some(names) => {
                let names: Option<Vec<String>> = names
                    .iter()
                    .map(|n| n.as_str().map(str::to_string))
                    .collect();
                let names = names.ok_or(CredalError::Dataset {
                    line: 1,
                    reason: "names must be strings".to_string(),
                })?;
                LabelSpace::with_names(k, names)
            }
            None => LabelSpace::new(k),
        }
        .map_err(|e| CredalError::Dataset {
            line: 1,
            reason: e.to_string(),
        })?;

        let mut rows = Vec::new();
        for (index, line) in lines {
            let line_no = index + 1;
            let row = parse_row(line, k).map_err(|reason| CredalError::Dataset {
                line: line_no,
                reason,
            })?;
            rows.push(row);
        }
        Ok(Dataset { label_space, rows })
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    /// Emit the canonical byte representation: fixed field order, floats
    /// with 17 significant digits.
    pub fn emit(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("{{\"schema\":{}", json_string(DATASET_SCHEMA)));
        out.push_str(&format!(",\"k\":{}", self.k()));
        if let Some(names) = self.label_space.names() {
            out.push_str(",\"names\":[");
            for (i, name) in names.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                out.push_str(&json_string(name));
            }
            out.push(']');
        }
        out.push_str("}\n");
        for row in &self.rows {
            out.push_str(&format!("{{\"id\":{}", json_string(&row.id)));
            out.push_str(&format!(
                ",\"model_probs\":{}",
                float_array(row.model_probs.entries())
            ));
            if let Some(plausibility) = &row.plausibility {
                out.push_str(&format!(
                    ",\"plausibility\":{}",
                    float_array(plausibility.entries())
                ));
            }
            if let Some(label) = row.label {
                out.push_str(&format!(",\"label\":{label}"));
            }
            out.push_str("}\n");
        }
        out
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.emit().as_bytes())
    }

    /// Rows as calibration records; fails with the first line missing a
    /// plausibility vector.
    pub fn to_calibration_records(&self) -> Result<Vec<CalibrationRecord>> {
        self.rows
            .iter()
            .enumerate()
            .map(|(i, row)| {
                let plausibility = row.plausibility.clone().ok_or(CredalError::Dataset {
                    line: i + 2,
                    reason: format!("row {:?} has no plausibility vector", row.id),
                })?;
                CalibrationRecord::new(row.id.clone(), row.model_probs.clone(), plausibility)
            })
            .collect()
    }

    /// Restrict to a label subset and renormalize both probability vectors
    /// over it (the generic form of per-dataset class filtering). Rows with
    /// no mass on the kept labels are dropped; realized labels outside the
    /// subset are cleared.
    pub fn restrict_labels(&self, keep: &[usize]) -> Result<Dataset> {
        if keep.len() < 2 {
            return Err(CredalError::InvalidParameter {
                reason: "need at least 2 labels to keep".to_string(),
            });
        }
        let k = self.k();
        if keep.iter().any(|&l| l >= k) {
            return Err(CredalError::InvalidParameter {
                reason: format!("kept labels must be below {k}"),
            });
        }
        let label_space = match self.label_space.names() {
            Some(names) => LabelSpace::with_names(
                keep.len(),
                keep.iter().map(|&l| names[l].clone()).collect(),
            )?,
            None => LabelSpace::new(keep.len())?,
        };
        let restrict = |p: &ProbabilityVector| -> Option<ProbabilityVector> {
            let selected: Vec<f64> = keep.iter().map(|&l| p.get(l)).collect();
            let mass: f64 = selected.iter().sum();
            if mass < 1e-12 {
                return None;
            }
            ProbabilityVector::new(selected.iter().map(|x| x / mass).collect()).ok()
        };
        let mut rows = Vec::new();
        for row in &self.rows {
            let Some(model_probs) = restrict(&row.model_probs) else {
                continue;
            };
            let plausibility = match &row.plausibility {
                Some(p) => match restrict(p) {
                    Some(p) => Some(p),
                    None => continue,
                },
                None => None,
            };
            let label = row
                .label
                .and_then(|old| keep.iter().position(|&l| l == old));
            rows.push(DatasetRow {
                id: row.id.clone(),
                model_probs,
                plausibility,
                label,
            });
        }
        Dataset::new(label_space, rows)
    }
}

fn validate_row(row: &DatasetRow, k: usize) -> std::result::Result<(), String> {
    if row.model_probs.k() != k {
        return Err(format!(
            "model_probs has {} entries, expected {k}",
            row.model_probs.k()
        ));
    }
    if let Some(p) = &row.plausibility {
        if p.k() != k {
            return Err(format!("plausibility has {} entries, expected {k}", p.k()));
        }
    }
    if let Some(label) = row.label {
        if label >= k {
            return Err(format!("label {label} outside the {k}-class space"));
        }
    }
    Ok(())
}

fn parse_row(line: &str, k: usize) -> std::result::Result<DatasetRow, String> {
    let value: serde_json::Value =
        serde_json::from_str(line).map_err(|e| format!("invalid JSON: {e}"))?;
    let id = value
        .get("id")
        .and_then(|v| v.as_str())
        .ok_or("row is missing \"id\"")?
        .to_string();
    let model_probs = parse_prob_array(&value, "model_probs", k)?
        .ok_or("row is missing \"model_probs\"")?;
    let plausibility = parse_prob_array(&value, "plausibility", k)?;
    let label = match value.get("label") {
        None | Some(serde_json::Value::Null) => None,
        Some(v) => {
            let label = v
                .as_u64()
                .ok_or_else(|| format!("label must be a nonnegative integer, got {v}"))?
                as usize;
            if label >= k {
                return Err(format!("label {label} outside the {k}-class space"));
            }
            Some(label)
        }
    };
    Ok(DatasetRow {
        id,
        model_probs,
        plausibility,
        label,
    })
}

fn parse_prob_array(
    value: &serde_json::Value,
    field: &str,
    k: usize,
) -> std::result::Result<Option<ProbabilityVector>, String> {
    let Some(raw) = value.get(field) else {
        return Ok(None);
    };
    if raw.is_null() {
        return Ok(None);
    }
    let array = raw
        .as_array()
        .ok_or_else(|| format!("{field} must be an array"))?;
    if array.len() != k {
        return Err(format!("{field} has {} entries, expected {k}", array.len()));
    }
    let entries: Option<Vec<f64>> = array.iter().map(|v| v.as_f64()).collect();
    let entries = entries.ok_or_else(|| format!("{field} entries must be numbers"))?;
    ProbabilityVector::new(entries).map(Some).map_err(|e| format!("{field}: {e}"))
}

/// A persisted calibration: the threshold plus enough provenance to reuse
/// it (schema version, conformity function id, digest of the calibration
/// dataset bytes, and a self-digest verified on load).
#[derive(Debug, Clone)]
pub struct CalibrationArtifact {
    pub alpha: f64,
    /// `None` encodes the `-inf` sentinel (vacuous region).
    pub tau: Option<f64>,
    pub n_calibration: usize,
    pub quantile_index: usize,
    pub k: usize,
    pub names: Option<Vec<String>>,
    pub conformity_id: String,
    pub dataset_digest: String,
}

impl CalibrationArtifact {
    pub fn new(
        threshold: &CalibratedThreshold,
        label_space: &LabelSpace,
        conformity_id: &str,
        dataset_digest: String,
    ) -> Self {
        let tau = threshold.tau();
        CalibrationArtifact {
            alpha: threshold.alpha(),
            tau: tau.is_finite().then_some(tau),
            n_calibration: threshold.n_calibration(),
            quantile_index: threshold.quantile_index(),
            k: label_space.k(),
            names: label_space.names().map(<[String]>::to_vec),
            conformity_id: conformity_id.to_string(),
            dataset_digest,
        }
    }

    pub fn tau_value(&self) -> f64 {
        self.tau.unwrap_or(f64::NEG_INFINITY)
    }

    pub fn threshold(&self) -> CalibratedThreshold {
        CalibratedThreshold::from_parts(self.tau_value(), self.alpha, self.n_calibration)
    }

    pub fn label_space(&self) -> Result<LabelSpace> {
        match &self.names {
            Some(names) => LabelSpace::with_names(self.k, names.clone()),
            None => LabelSpace::new(self.k),
        }
    }

    /// Canonical payload (everything except the self-digest), in fixed
    /// field order with 17-digit floats.
    fn payload(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("\"schema\":{}", json_string(ARTIFACT_SCHEMA)));
        out.push_str(&format!(",\"alpha\":{}", fmt_f64(self.alpha)));
        match self.tau {
            Some(tau) => out.push_str(&format!(",\"tau\":{}", fmt_f64(tau))),
            None => out.push_str(",\"tau\":null"),
        }
        out.push_str(&format!(",\"n_calibration\":{}", self.n_calibration));
        out.push_str(&format!(",\"quantile_index\":{}", self.quantile_index));
        out.push_str(&format!(",\"k\":{}", self.k));
        if let Some(names) = &self.names {
            out.push_str(",\"names\":[");
            for (i, name) in names.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                out.push_str(&json_string(name));
            }
            out.push(']');
        }
        out.push_str(&format!(
            ",\"conformity\":{}",
            json_string(&self.conformity_id)
        ));
        out.push_str(&format!(
            ",\"dataset_digest\":{}",
            json_string(&self.dataset_digest)
        ));
        out
    }

    pub fn emit(&self) -> String {
        let payload = self.payload();
        let digest = sha256_hex(payload.as_bytes());
        format!("{{{payload},\"artifact_digest\":{}}}\n", json_string(&digest))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.emit().as_bytes())
    }

    /// Load and verify. Returns the artifact and any integrity warnings
    /// (digest mismatch on re-use does not abort, it warns).
    pub fn load(path: &Path) -> Result<(Self, Vec<String>)> {
        let text = std::fs::read_to_string(path)?;
        let value: serde_json::Value =
            serde_json::from_str(text.trim()).map_err(|e| CredalError::Dataset {
                line: 1,
                reason: format!("invalid artifact JSON: {e}"),
            })?;
        let field_err = |name: &str| CredalError::Dataset {
            line: 1,
            reason: format!("artifact is missing {name:?}"),
        };
        if value.get("schema").and_then(|v| v.as_str()) != Some(ARTIFACT_SCHEMA) {
            return Err(CredalError::Dataset {
                line: 1,
                reason: format!("expected artifact schema {ARTIFACT_SCHEMA:?}"),
            });
        }
        let artifact = CalibrationArtifact {
            alpha: value
                .get("alpha")
                .and_then(|v| v.as_f64())
                .ok_or_else(|| field_err("alpha"))?,
            tau: match value.get("tau") {
                Some(serde_json::Value::Null) | None => None,
                Some(v) => Some(v.as_f64().ok_or_else(|| field_err("tau"))?),
            },
            n_calibration: value
                .get("n_calibration")
                .and_then(|v| v.as_u64())
                .ok_or_else(|| field_err("n_calibration"))? as usize,
            quantile_index: value
                .get("quantile_index")
                .and_then(|v| v.as_u64())
                .ok_or_else(|| field_err("quantile_index"))? as usize,
            k: value
                .get("k")
                .and_then(|v| v.as_u64())
                .ok_or_else(|| field_err("k"))? as usize,
            names: value.get("names").and_then(|v| v.as_array()).map(|names| {
                names
                    .iter()
                    .filter_map(|n| n.as_str().map(str::to_string))
                    .collect()
            }),
            conformity_id: value
                .get("conformity")
                .and_then(|v| v.as_str())
                .ok_or_else(|| field_err("conformity"))?
                .to_string(),
            dataset_digest: value
                .get("dataset_digest")
                .and_then(|v| v.as_str())
                .ok_or_else(|| field_err("dataset_digest"))?
                .to_string(),
        };

        let mut warnings = Vec::new();
        let recorded = value
            .get("artifact_digest")
            .and_then(|v| v.as_str())
            .unwrap_or("");
        let expected = sha256_hex(artifact.payload().as_bytes());
        if recorded != expected {
            warnings.push(format!(
                "artifact digest mismatch (recorded {recorded}, recomputed {expected}); the file may have been edited"
            ));
        }
        Ok((artifact, warnings))
    }
}
