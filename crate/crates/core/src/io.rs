//! On-disk documents: one JSON envelope carrying a schema version, a kind
//! tag and a kind-specific payload.
//!
//! Complex numbers are stored as `[re, im]` pairs and matrices as row-major
//! nested arrays. Serialization is deterministic, floats round trip
//! bit-exactly, and parsing re-checks every domain invariant, so a loaded
//! value is as trustworthy as a freshly constructed one.

use crate::density::DensityMatrix;
use crate::equidistant::{EquidistantConfig, StateSet};
use crate::measurement::{CountTable, ProbabilityTable, TableSource};
use crate::tomography::ReconstructionReport;
use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::path::Path;
use thiserror::Error;

/// Version tag this build reads and writes.
pub const SCHEMA_VERSION: &str = "1";

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("malformed document at line {line}, column {column}: {message}")]
    MalformedDocument { line: usize, column: usize, message: String },
    #[error("schema version {found:?} is not supported (this build reads {expected:?})")]
    SchemaMismatch { found: String, expected: String },
    #[error("non-finite value at {location}")]
    NonFiniteValue { location: String },
    #[error("document violates an invariant: {0}")]
    InvariantViolation(String),
    #[error("expected a {expected} document, found {found}")]
    KindMismatch { expected: &'static str, found: &'static str },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

type ComplexPair = [f64; 2];
type ComplexMatrix = Vec<Vec<ComplexPair>>;

/// Top-level envelope.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Document {
    pub schema_version: String,
    #[serde(flatten)]
    pub payload: Payload,
}

/// Kind-specific content.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "payload", rename_all = "snake_case")]
pub enum Payload {
    Config(ConfigPayload),
    States(StatesPayload),
    Probabilities(ProbabilitiesPayload),
    Counts(CountsPayload),
    Report(ReportPayload),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConfigPayload {
    pub dim: usize,
    pub alpha_mod: f64,
    pub theta: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StatesPayload {
    pub config: ConfigPayload,
    /// `states[s][j]` is the component list of one unit vector.
    pub states: Vec<Vec<Vec<ComplexPair>>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourcePayload {
    Exact,
    Estimated { shots: u64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbabilitiesPayload {
    pub dim: usize,
    pub source: SourcePayload,
    pub values: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CountsPayload {
    pub dim: usize,
    pub shots: u64,
    pub counts: Vec<Vec<u64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportPayload {
    pub dim: usize,
    /// Configuration the inversion ran under; absent when the document just
    /// carries a bare state.
    pub config: Option<ConfigPayload>,
    pub rho_raw: ComplexMatrix,
    pub rho_physical: Option<ComplexMatrix>,
    /// One entry per solved diagonal; empty for bare-state documents.
    pub condition_numbers: Vec<f64>,
    pub residual: f64,
    /// "eigenvalue_clipping" or "none".
    pub post_processing: String,
}

impl Document {
    fn wrap(payload: Payload) -> Self {
        Self { schema_version: SCHEMA_VERSION.to_string(), payload }
    }

    pub fn kind(&self) -> &'static str {
        kind_name(&self.payload)
    }
}

fn kind_name(payload: &Payload) -> &'static str {
    match payload {
        Payload::Config(_) => "config",
        Payload::States(_) => "states",
        Payload::Probabilities(_) => "probabilities",
        Payload::Counts(_) => "counts",
        Payload::Report(_) => "report",
    }
}

fn pair(c: Complex64) -> ComplexPair {
    [c.re, c.im]
}

fn complex_matrix(m: &DMatrix<Complex64>) -> ComplexMatrix {
    (0..m.nrows())
        .map(|p| (0..m.ncols()).map(|q| pair(m[(p, q)])).collect())
        .collect()
}

fn matrix_from(m: &ComplexMatrix) -> Result<DMatrix<Complex64>, FormatError> {
    let rows = m.len();
    if rows == 0 || m.iter().any(|row| row.len() != rows) {
        return Err(FormatError::InvariantViolation(
            "matrix must be square and nonempty".to_string(),
        ));
    }
    Ok(DMatrix::from_fn(rows, rows, |p, q| {
        Complex64::new(m[p][q][0], m[p][q][1])
    }))
}

fn invariant(e: impl std::fmt::Display) -> FormatError {
    FormatError::InvariantViolation(e.to_string())
}

fn config_payload(config: &EquidistantConfig) -> ConfigPayload {
    ConfigPayload { dim: config.dim(), alpha_mod: config.alpha_mod(), theta: config.theta() }
}

pub fn config_document(config: &EquidistantConfig) -> Document {
    Document::wrap(Payload::Config(config_payload(config)))
}

pub fn states_document(set: &StateSet) -> Document {
    let n = set.dim();
    let states = (0..n)
        .map(|s| {
            (0..n)
                .map(|j| set.state(s, j).iter().map(|&c| pair(c)).collect())
                .collect()
        })
        .collect();
    Document::wrap(Payload::States(StatesPayload {
        config: config_payload(set.config()),
        states,
    }))
}

pub fn probabilities_document(table: &ProbabilityTable) -> Document {
    let source = match table.source() {
        TableSource::Exact => SourcePayload::Exact,
        TableSource::Estimated { shots } => SourcePayload::Estimated { shots },
    };
    Document::wrap(Payload::Probabilities(ProbabilitiesPayload {
        dim: table.dim(),
        source,
        values: table.values().to_vec(),
    }))
}

pub fn counts_document(counts: &CountTable) -> Document {
    Document::wrap(Payload::Counts(CountsPayload {
        dim: counts.dim(),
        shots: counts.shots(),
        counts: counts.counts().to_vec(),
    }))
}

pub fn report_document(report: &ReconstructionReport, config: Option<&EquidistantConfig>) -> Document {
    Document::wrap(Payload::Report(ReportPayload {
        dim: report.rho_raw.nrows(),
        config: config.map(config_payload),
        rho_raw: complex_matrix(&report.rho_raw),
        rho_physical: report.rho_physical.as_ref().map(|d| complex_matrix(d.matrix())),
        condition_numbers: report.condition_numbers.clone(),
        residual: report.residual,
        post_processing: if report.rho_physical.is_some() {
            "eigenvalue_clipping"
        } else {
            "none"
        }
        .to_string(),
    }))
}

/// Wraps a bare density matrix as a report document with empty diagnostics;
/// the pipeline uses this shape to hand states between commands.
pub fn density_document(rho: &DensityMatrix) -> Document {
    Document::wrap(Payload::Report(ReportPayload {
        dim: rho.dim(),
        config: None,
        rho_raw: complex_matrix(rho.matrix()),
        rho_physical: Some(complex_matrix(rho.matrix())),
        condition_numbers: Vec::new(),
        residual: 0.0,
        post_processing: "none".to_string(),
    }))
}

fn build_config(p: &ConfigPayload) -> Result<EquidistantConfig, FormatError> {
    EquidistantConfig::new(p.dim, p.alpha_mod, p.theta).map_err(invariant)
}

fn build_state_set(p: &StatesPayload) -> Result<StateSet, FormatError> {
    let config = build_config(&p.config)?;
    let states = p
        .states
        .iter()
        .map(|family| {
            family
                .iter()
                .map(|v| v.iter().map(|&[re, im]| Complex64::new(re, im)).collect())
                .collect()
        })
        .collect();
    StateSet::from_parts(config, states).map_err(invariant)
}

fn build_probability_table(p: &ProbabilitiesPayload) -> Result<ProbabilityTable, FormatError> {
    if p.values.len() != p.dim {
        return Err(FormatError::InvariantViolation(format!(
            "dim says {} but the table has {} rows",
            p.dim,
            p.values.len()
        )));
    }
    let source = match p.source {
        SourcePayload::Exact => TableSource::Exact,
        SourcePayload::Estimated { shots } => TableSource::Estimated { shots },
    };
    ProbabilityTable::new(p.values.clone(), source).map_err(invariant)
}

fn build_count_table(p: &CountsPayload) -> Result<CountTable, FormatError> {
    if p.counts.len() != p.dim {
        return Err(FormatError::InvariantViolation(format!(
            "dim says {} but the table has {} rows",
            p.dim,
            p.counts.len()
        )));
    }
    CountTable::new(p.counts.clone(), p.shots).map_err(invariant)
}

fn validate_report(p: &ReportPayload) -> Result<(), FormatError> {
    let raw = matrix_from(&p.rho_raw)?;
    if raw.nrows() != p.dim {
        return Err(FormatError::InvariantViolation(format!(
            "dim says {} but rho_raw is {} x {}",
            p.dim,
            raw.nrows(),
            raw.ncols()
        )));
    }
    if let Some(physical) = &p.rho_physical {
        let mat = matrix_from(physical)?;
        if mat.nrows() != p.dim {
            return Err(FormatError::InvariantViolation(
                "rho_physical dimension differs from dim".to_string(),
            ));
        }
        DensityMatrix::new(mat).map_err(invariant)?;
    }
    if let Some(config) = &p.config {
        let config = build_config(config)?;
        if config.dim() != p.dim {
            return Err(FormatError::InvariantViolation(
                "config dimension differs from dim".to_string(),
            ));
        }
    }
    let solved = p.dim.div_ceil(2);
    if !(p.condition_numbers.is_empty() || p.condition_numbers.len() == solved) {
        return Err(FormatError::InvariantViolation(format!(
            "expected 0 or {solved} condition numbers, got {}",
            p.condition_numbers.len()
        )));
    }
    if p.residual < 0.0 {
        return Err(FormatError::InvariantViolation(format!(
            "residual must be nonnegative, got {}",
            p.residual
        )));
    }
    if p.post_processing != "none" && p.post_processing != "eigenvalue_clipping" {
        return Err(FormatError::InvariantViolation(format!(
            "unknown post_processing {:?}",
            p.post_processing
        )));
    }
    Ok(())
}

pub fn config_from(document: &Document) -> Result<EquidistantConfig, FormatError> {
    match &document.payload {
        Payload::Config(p) => build_config(p),
        other => Err(FormatError::KindMismatch { expected: "config", found: kind_name(other) }),
    }
}

pub fn state_set_from(document: &Document) -> Result<StateSet, FormatError> {
    match &document.payload {
        Payload::States(p) => build_state_set(p),
        other => Err(FormatError::KindMismatch { expected: "states", found: kind_name(other) }),
    }
}

pub fn probability_table_from(document: &Document) -> Result<ProbabilityTable, FormatError> {
    match &document.payload {
        Payload::Probabilities(p) => build_probability_table(p),
        other => Err(FormatError::KindMismatch {
            expected: "probabilities",
            found: kind_name(other),
        }),
    }
}

pub fn count_table_from(document: &Document) -> Result<CountTable, FormatError> {
    match &document.payload {
        Payload::Counts(p) => build_count_table(p),
        other => Err(FormatError::KindMismatch { expected: "counts", found: kind_name(other) }),
    }
}

/// Density matrix carried by a report document: the projected state when
/// present, otherwise the raw matrix (which must then validate on its own).
pub fn density_from(document: &Document) -> Result<DensityMatrix, FormatError> {
    match &document.payload {
        Payload::Report(p) => {
            let source = p.rho_physical.as_ref().unwrap_or(&p.rho_raw);
            DensityMatrix::new(matrix_from(source)?).map_err(invariant)
        }
        other => Err(FormatError::KindMismatch { expected: "report", found: kind_name(other) }),
    }
}

fn check_finite(value: f64, location: impl Fn() -> String) -> Result<(), FormatError> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(FormatError::NonFiniteValue { location: location() })
    }
}

fn ensure_finite(payload: &Payload) -> Result<(), FormatError> {
    match payload {
        Payload::Config(p) => {
            check_finite(p.alpha_mod, || "alpha_mod".to_string())?;
            check_finite(p.theta, || "theta".to_string())?;
        }
        Payload::States(p) => {
            check_finite(p.config.alpha_mod, || "config.alpha_mod".to_string())?;
            check_finite(p.config.theta, || "config.theta".to_string())?;
            for (s, family) in p.states.iter().enumerate() {
                for (j, v) in family.iter().enumerate() {
                    for (m, entry) in v.iter().enumerate() {
                        check_finite(entry[0], || format!("states[{s}][{j}][{m}].re"))?;
                        check_finite(entry[1], || format!("states[{s}][{j}][{m}].im"))?;
                    }
                }
            }
        }
        Payload::Probabilities(p) => {
            for (s, row) in p.values.iter().enumerate() {
                for (j, &v) in row.iter().enumerate() {
                    check_finite(v, || format!("values[{s}][{j}]"))?;
                }
            }
        }
        Payload::Counts(_) => {}
        Payload::Report(p) => {
            if let Some(config) = &p.config {
                check_finite(config.alpha_mod, || "config.alpha_mod".to_string())?;
                check_finite(config.theta, || "config.theta".to_string())?;
            }
            for (name, matrix) in [("rho_raw", Some(&p.rho_raw)), ("rho_physical", p.rho_physical.as_ref())]
            {
                let Some(matrix) = matrix else { continue };
                for (row_index, row) in matrix.iter().enumerate() {
                    for (col_index, entry) in row.iter().enumerate() {
                        check_finite(entry[0], || format!("{name}[{row_index}][{col_index}].re"))?;
                        check_finite(entry[1], || format!("{name}[{row_index}][{col_index}].im"))?;
                    }
                }
            }
            for (k, &c) in p.condition_numbers.iter().enumerate() {
                check_finite(c, || format!("condition_numbers[{k}]"))?;
            }
            check_finite(p.residual, || "residual".to_string())?;
        }
    }
    Ok(())
}

fn validate(payload: &Payload) -> Result<(), FormatError> {
    match payload {
        Payload::Config(p) => {
            build_config(p)?;
        }
        Payload::States(p) => {
            build_state_set(p)?;
        }
        Payload::Probabilities(p) => {
            build_probability_table(p)?;
        }
        Payload::Counts(p) => {
            build_count_table(p)?;
        }
        Payload::Report(p) => {
            validate_report(p)?;
        }
    }
    Ok(())
}

fn syntax_error(e: serde_json::Error) -> FormatError {
    FormatError::MalformedDocument { line: e.line(), column: e.column(), message: e.to_string() }
}

/// Renders a document as pretty JSON with a trailing newline.
///
/// Refuses non-finite numbers instead of letting them decay to `null`.
pub fn serialize(document: &Document) -> Result<String, FormatError> {
    ensure_finite(&document.payload)?;
    let mut text = serde_json::to_string_pretty(document).map_err(syntax_error)?;
    text.push('\n');
    Ok(text)
}

/// Parses and fully validates a document.
///
/// Syntax errors carry their position; an unsupported `schema_version` is
/// reported before any shape checking; every domain invariant is re-checked.
pub fn parse(text: &str) -> Result<Document, FormatError> {
    let probe: serde_json::Value = serde_json::from_str(text).map_err(syntax_error)?;
    match probe.get("schema_version").and_then(|v| v.as_str()) {
        None => {
            return Err(FormatError::MalformedDocument {
                line: 0,
                column: 0,
                message: "missing schema_version".to_string(),
            })
        }
        Some(found) if found != SCHEMA_VERSION => {
            return Err(FormatError::SchemaMismatch {
                found: found.to_string(),
                expected: SCHEMA_VERSION.to_string(),
            })
        }
        Some(_) => {}
    }
    let document: Document = serde_json::from_str(text).map_err(syntax_error)?;
    ensure_finite(&document.payload)?;
    validate(&document.payload)?;
    Ok(document)
}

pub fn read_document(path: &Path) -> Result<Document, FormatError> {
    parse(&std::fs::read_to_string(path)?)
}

pub fn write_document(path: &Path, document: &Document) -> Result<(), FormatError> {
    std::fs::write(path, serialize(document)?)?;
    Ok(())
}
