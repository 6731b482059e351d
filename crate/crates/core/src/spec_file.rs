//! JSON model-specification files.
//!
//! ```json
//! {
//!   "p": 5, "m": 2, "metric": "correlation",
//!   "lambda_pattern": [[{"trunc": "+"}, "0"], ["free", "0"], ["0", {"trunc": "+"}],
//!                      ["0", "free"], ["free", "free"]],
//!   "lambda": [[0.9, 0], [0.8, 0], [0, 0.7], [0, 0.6], [0.5, 0.4]],
//!   "phi": [[1, 0.3], [0.3, 1]],
//!   "psi": [0.2, 0.3, 0.4, 0.5, 0.6]
//! }
//! ```
//!
//! Cell encodings: `"free"`, `"0"` (fixed zero), `{"fixed": v}` with `v != 0`,
//! `{"trunc": "+" | "-", "threshold": c}` with optional `c >= 0` (default 0).

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::de::{self, Deserializer};
use serde::ser::{SerializeMap, Serializer};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::linalg;
use crate::model::{
    CellSpec, FactorSolution, LoadingPattern, Metric, ModelSpec, DEFAULT_VALUE_TOL,
};

#[derive(Debug, Error)]
pub enum SpecFileError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid specification: {0}")]
    Invalid(String),
}

/// One cell of `lambda_pattern`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellEncoding(pub CellSpec);

fn decode_cell(v: &Value) -> Result<CellSpec, String> {
    match v {
        Value::String(s) if s == "free" => Ok(CellSpec::Free),
        Value::String(s) if s == "0" => Ok(CellSpec::FixedZero),
        Value::String(s) => Err(format!("unknown cell encoding \"{s}\"")),
        Value::Object(map) => {
            if let Some(fixed) = map.get("fixed") {
                if map.len() != 1 {
                    return Err("a fixed cell takes only the \"fixed\" key".into());
                }
                let v = fixed.as_f64().ok_or("fixed value must be a number")?;
                if v == 0.0 {
                    return Err("fixed value must be nonzero".into());
                }
                return Ok(CellSpec::FixedValue(v));
            }
            if let Some(dir) = map.get("trunc") {
                if map.keys().any(|k| k != "trunc" && k != "threshold") {
                    return Err("a truncated cell takes only \"trunc\" and \"threshold\"".into());
                }
                let c = match map.get("threshold") {
                    None => 0.0,
                    Some(t) => t.as_f64().ok_or("threshold must be a number")?,
                };
                if !c.is_finite() || c < 0.0 {
                    return Err("threshold must be finite and >= 0".into());
                }
                return match dir.as_str() {
                    Some("+") => Ok(CellSpec::TruncatedPositive(c)),
                    Some("-") => Ok(CellSpec::TruncatedNegative(c)),
                    _ => Err("trunc must be \"+\" or \"-\"".into()),
                };
            }
            Err("cell object needs a \"fixed\" or \"trunc\" key".into())
        }
        other => Err(format!(
            "cell must be \"free\", \"0\", {{\"fixed\": v}} or {{\"trunc\": ...}}, found {other}"
        )),
    }
}

impl<'de> Deserialize<'de> for CellEncoding {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v = Value::deserialize(d)?;
        decode_cell(&v).map(CellEncoding).map_err(de::Error::custom)
    }
}

impl Serialize for CellEncoding {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self.0 {
            CellSpec::Free => s.serialize_str("free"),
            CellSpec::FixedZero => s.serialize_str("0"),
            CellSpec::FixedValue(v) => {
                let mut map = s.serialize_map(Some(1))?;
                map.serialize_entry("fixed", &v)?;
                map.end()
            }
            CellSpec::TruncatedPositive(c) | CellSpec::TruncatedNegative(c) => {
                let dir = if matches!(self.0, CellSpec::TruncatedPositive(_)) {
                    "+"
                } else {
                    "-"
                };
                let mut map = s.serialize_map(Some(if c > 0.0 { 2 } else { 1 }))?;
                map.serialize_entry("trunc", dir)?;
                if c > 0.0 {
                    map.serialize_entry("threshold", &c)?;
                }
                map.end()
            }
        }
    }
}

/// The on-disk schema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpecFile {
    pub p: usize,
    pub m: usize,
    pub lambda_pattern: Vec<Vec<CellEncoding>>,
    pub metric: Metric,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub psi: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample_cov: Option<Vec<Vec<f64>>>,
}

/// A validated specification file.
#[derive(Debug, Clone)]
pub struct LoadedSpec {
    pub spec: ModelSpec,
    pub lambda: Option<DMatrix<f64>>,
    /// Present when lambda, phi and psi are all given.
    pub solution: Option<FactorSolution>,
    pub sample_cov: Option<DMatrix<f64>>,
}

fn matrix(
    rows: &[Vec<f64>],
    nrows: usize,
    ncols: usize,
    name: &str,
) -> Result<DMatrix<f64>, SpecFileError> {
    if rows.len() != nrows || rows.iter().any(|r| r.len() != ncols) {
        return Err(SpecFileError::Invalid(format!(
            "{name} must be {nrows} x {ncols}"
        )));
    }
    Ok(DMatrix::from_row_iterator(
        nrows,
        ncols,
        rows.iter().flat_map(|r| r.iter().copied()),
    ))
}

impl ModelSpecFile {
    pub fn from_json(text: &str) -> Result<Self, SpecFileError> {
        serde_json::from_str(text).map_err(|e| SpecFileError::Parse {
            line: e.line(),
            column: e.column(),
            message: strip_position(&e.to_string()),
        })
    }

    pub fn from_path(path: &Path) -> Result<Self, SpecFileError> {
        let text = std::fs::read_to_string(path).map_err(|source| SpecFileError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("spec files always serialize")
    }

    /// Build a file from a spec and optional numeric solution.
    pub fn from_model(spec: &ModelSpec, sol: Option<&FactorSolution>) -> Self {
        let pat = &spec.pattern;
        let rows = |a: &DMatrix<f64>| -> Vec<Vec<f64>> {
            a.row_iter().map(|r| r.iter().copied().collect()).collect()
        };
        Self {
            p: pat.p(),
            m: pat.m(),
            lambda_pattern: (0..pat.p())
                .map(|j| (0..pat.m()).map(|k| CellEncoding(pat.cell(j, k))).collect())
                .collect(),
            metric: spec.metric,
            lambda: sol.map(|s| rows(s.lambda())),
            phi: sol.map(|s| rows(s.phi())),
            psi: sol.map(|s| s.psi().iter().copied().collect()),
            sample_cov: None,
        }
    }

    /// Check dimensions and that the numeric arrays realize the pattern.
    pub fn validate(&self) -> Result<LoadedSpec, SpecFileError> {
        let (p, m) = (self.p, self.m);
        if self.lambda_pattern.len() != p || self.lambda_pattern.iter().any(|r| r.len() != m) {
            return Err(SpecFileError::Invalid(format!(
                "lambda_pattern must be {p} x {m}"
            )));
        }
        let pattern = LoadingPattern::from_rows(
            self.lambda_pattern
                .iter()
                .map(|r| r.iter().map(|c| c.0).collect())
                .collect(),
        )
        .map_err(|e| SpecFileError::Invalid(e.to_string()))?;
        let spec = ModelSpec::new(pattern, self.metric);

        let lambda = self
            .lambda
            .as_ref()
            .map(|l| matrix(l, p, m, "lambda"))
            .transpose()?;
        if let Some(l) = &lambda {
            spec.pattern
                .check_realized(l, DEFAULT_VALUE_TOL)
                .map_err(|e| SpecFileError::Invalid(e.to_string()))?;
        }
        let phi = self
            .phi
            .as_ref()
            .map(|f| matrix(f, m, m, "phi"))
            .transpose()?;
        let psi = match &self.psi {
            Some(v) if v.len() != p => {
                return Err(SpecFileError::Invalid(format!("psi must have length {p}")))
            }
            Some(v) => Some(DVector::from_column_slice(v)),
            None => None,
        };
        let solution = match (&lambda, phi, psi) {
            (Some(l), Some(f), Some(s)) => Some(
                FactorSolution::new(l.clone(), f, s)
                    .map_err(|e| SpecFileError::Invalid(e.to_string()))?,
            ),
            (_, None, None) => None,
            _ => {
                return Err(SpecFileError::Invalid(
                    "phi and psi must be given together with lambda".into(),
                ))
            }
        };
        if let Some(sol) = &solution {
            if self.metric == Metric::Correlation {
                let dev = sol
                    .phi()
                    .diagonal()
                    .iter()
                    .fold(0.0_f64, |a, v| a.max((v - 1.0).abs()));
                if dev > DEFAULT_VALUE_TOL {
                    return Err(SpecFileError::Invalid(
                        "correlation metric requires diag(phi) = 1".into(),
                    ));
                }
            }
        }
        let sample_cov = self
            .sample_cov
            .as_ref()
            .map(|s| matrix(s, p, p, "sample_cov"))
            .transpose()?;
        if let Some(s) = &sample_cov {
            if linalg::asymmetry(s) > DEFAULT_VALUE_TOL * linalg::max_abs(s).max(1.0)
                || !linalg::is_positive_definite(s)
            {
                return Err(SpecFileError::Invalid(
                    "sample_cov must be symmetric positive definite".into(),
                ));
            }
        }
        Ok(LoadedSpec {
            spec,
            lambda,
            solution,
            sample_cov,
        })
    }
}

fn strip_position(msg: &str) -> String {
    match msg.rfind(" at line ") {
        Some(i) => msg[..i].to_string(),
        None => msg.to_string(),
    }
}

/// Read, parse and validate a specification file.
pub fn load(path: &Path) -> Result<LoadedSpec, SpecFileError> {
    ModelSpecFile::from_path(path)?.validate()
}
