//! File formats: group definitions, single matrices, circuits, and the
//! structured report serialisations.
//!
//! All matrix entries use the cyclotomic literal syntax (`w{N}^{k}`, rationals
//! `p/q`, sums and products), so files are exact. Parsers are hardened against
//! untrusted input: they are exercised by the fuzz targets under `fuzz/`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::catalog::{resolve_entry, CatalogError};
use crate::cyclotomic::{parse_cyclo, Cyclo, CycloParseError};
use crate::group::{GroupError, MatrixGroup};
use crate::matrix::{gates, CMatrix};
use crate::normaliser::{FoundNormaliser, NormaliserReport};
use crate::simulator::{Circuit, GateWires, SimError};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("malformed JSON: {0}")]
    Json(String),
    #[error("bad cyclotomic literal {literal:?}: {source}")]
    Literal {
        literal: String,
        source: CycloParseError,
    },
    #[error("matrix rows must form a square of dimension 1–4, got {0} rows")]
    BadShape(usize),
    #[error("ragged matrix: row {0} has {1} entries, expected {2}")]
    RaggedRow(usize, usize, usize),
    #[error("group file has no generators")]
    NoGenerators,
    #[error("unknown named gate {0:?}")]
    UnknownGate(String),
    #[error(transparent)]
    Catalog(#[from] CatalogError),
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error(transparent)]
    Sim(#[from] SimError),
}

const MAX_FILE_DIM: usize = 4;

// ---------------------------------------------------------------------------
// group files
// ---------------------------------------------------------------------------

/// On-disk generator: either a bare row matrix of literals, or an object with
/// an optional scalar prefactor.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GeneratorSpec {
    Rows(Vec<Vec<String>>),
    Scaled {
        #[serde(default)]
        scale: Option<String>,
        rows: Vec<Vec<String>>,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GroupFile {
    pub dim: usize,
    #[serde(default)]
    pub name: Option<String>,
    pub generators: Vec<GeneratorSpec>,
}

fn parse_literal(s: &str) -> Result<Cyclo, IoError> {
    parse_cyclo(s).map_err(|source| IoError::Literal { literal: s.to_string(), source })
}

fn rows_to_matrix(rows: &[Vec<String>], scale: Option<&str>) -> Result<CMatrix, IoError> {
    let d = rows.len();
    if d == 0 || d > MAX_FILE_DIM {
        return Err(IoError::BadShape(d));
    }
    let mut entries = Vec::with_capacity(d * d);
    for (i, row) in rows.iter().enumerate() {
        if row.len() != d {
            return Err(IoError::RaggedRow(i, row.len(), d));
        }
        for e in row {
            entries.push(parse_literal(e)?);
        }
    }
    let mut m = CMatrix::new(d, entries);
    if let Some(s) = scale {
        m = m.scale(&parse_literal(s)?);
    }
    Ok(m)
}

impl GeneratorSpec {
    pub fn to_matrix(&self) -> Result<CMatrix, IoError> {
        match self {
            GeneratorSpec::Rows(rows) => rows_to_matrix(rows, None),
            GeneratorSpec::Scaled { scale, rows } => rows_to_matrix(rows, scale.as_deref()),
        }
    }
}

/// Parse a group definition; structural validation only — closure happens in
/// [`load_group`].
pub fn parse_group_file(text: &str) -> Result<(Vec<CMatrix>, Option<String>), IoError> {
    let file: GroupFile = serde_json::from_str(text).map_err(|e| IoError::Json(e.to_string()))?;
    if file.generators.is_empty() {
        return Err(IoError::NoGenerators);
    }
    if file.dim == 0 || file.dim > MAX_FILE_DIM {
        return Err(IoError::BadShape(file.dim));
    }
    let mut generators = Vec::with_capacity(file.generators.len());
    for g in &file.generators {
        let m = g.to_matrix()?;
        if m.dim() != file.dim {
            return Err(IoError::BadShape(m.dim()));
        }
        generators.push(m);
    }
    Ok((generators, file.name))
}

/// Close a parsed group file into a group.
pub fn load_group(text: &str, max_order: usize) -> Result<Arc<MatrixGroup>, IoError> {
    let (generators, _) = parse_group_file(text)?;
    Ok(MatrixGroup::close(generators, max_order)?)
}

/// Resolve `catalog:<name>`, a bare catalog name, or a path to a group file.
pub fn resolve_group(spec: &str, max_order: usize) -> Result<Arc<MatrixGroup>, IoError> {
    let name = spec.strip_prefix("catalog:").unwrap_or(spec);
    if let Ok(entry) = resolve_entry(name) {
        return Ok(MatrixGroup::close(entry.generators, max_order)?);
    }
    let text = std::fs::read_to_string(spec)
        .map_err(|e| IoError::Json(format!("cannot read group {spec:?}: {e}")))?;
    load_group(&text, max_order)
}

pub fn group_to_file(dim: usize, name: Option<&str>, generators: &[CMatrix]) -> GroupFile {
    GroupFile {
        dim,
        name: name.map(str::to_string),
        generators: generators
            .iter()
            .map(|m| {
                GeneratorSpec::Rows(
                    (0..m.dim())
                        .map(|i| (0..m.dim()).map(|j| m[(i, j)].to_string()).collect())
                        .collect(),
                )
            })
            .collect(),
    }
}

// ---------------------------------------------------------------------------
// matrix files
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatrixFile {
    pub rows: Vec<Vec<String>>,
    #[serde(default)]
    pub scale: Option<String>,
}

pub fn parse_matrix_file(text: &str) -> Result<CMatrix, IoError> {
    let file: MatrixFile = serde_json::from_str(text).map_err(|e| IoError::Json(e.to_string()))?;
    rows_to_matrix(&file.rows, file.scale.as_deref())
}

pub fn matrix_to_rows(m: &CMatrix) -> Vec<Vec<String>> {
    (0..m.dim())
        .map(|i| (0..m.dim()).map(|j| m[(i, j)].to_string()).collect())
        .collect()
}

// ---------------------------------------------------------------------------
// circuit files
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CircuitFile {
    /// Catalog name or path of the base group.
    pub group: String,
    pub wires: usize,
    /// One state vector of literals per wire.
    pub input: Vec<Vec<String>>,
    pub gates: Vec<GateSpec>,
    #[serde(default)]
    pub measure: Vec<MeasureSpec>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GateSpec {
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default)]
    pub matrix: Option<Vec<Vec<String>>>,
    pub wires: Vec<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MeasureSpec {
    pub wire: usize,
    /// Gate count after which the measurement happens; defaults to the end.
    #[serde(default)]
    pub after: Option<usize>,
}

/// Built-in gate names for circuit files.
pub fn named_gate(name: &str) -> Result<CMatrix, IoError> {
    let gate = match name {
        "X" => gates::pauli_x(),
        "Y" => gates::pauli_y(),
        "Z" => gates::pauli_z(),
        "H" => gates::hadamard(),
        "P" => gates::phase_gate(),
        "CZ" => gates::cz(),
        "CNOT" => gates::cnot(),
        "SWAP" => gates::swap(),
        other => {
            // Zroot(m) = diag(1, ω_{2m})
            if let Some(arg) = other.strip_prefix("Zroot(").and_then(|s| s.strip_suffix(')')) {
                let m: u32 = arg
                    .trim()
                    .parse()
                    .map_err(|_| IoError::UnknownGate(other.to_string()))?;
                if m == 0 || m > 1024 {
                    return Err(IoError::UnknownGate(other.to_string()));
                }
                gates::z_root(m)
            } else {
                return Err(IoError::UnknownGate(other.to_string()));
            }
        }
    };
    Ok(gate)
}

/// Structural parse of a circuit file (no group resolution, no verification).
pub fn parse_circuit_file(text: &str) -> Result<CircuitFile, IoError> {
    let file: CircuitFile = serde_json::from_str(text).map_err(|e| IoError::Json(e.to_string()))?;
    if file.wires == 0 || file.wires > 64 {
        return Err(IoError::Json(format!("unsupported wire count {}", file.wires)));
    }
    if file.input.len() != file.wires {
        return Err(IoError::Json(format!(
            "{} input states for {} wires",
            file.input.len(),
            file.wires
        )));
    }
    for g in &file.gates {
        if g.name.is_none() && g.matrix.is_none() {
            return Err(IoError::Json("gate needs a name or a matrix".into()));
        }
        if g.wires.is_empty() || g.wires.len() > 2 {
            return Err(IoError::Json("gates act on one or two wires".into()));
        }
    }
    Ok(file)
}

/// Load a circuit file into a verified [`Circuit`], resolving the group.
pub fn load_circuit(text: &str, max_order: usize) -> Result<Circuit, IoError> {
    let file = parse_circuit_file(text)?;
    let group = resolve_group(&file.group, max_order)?;
    let mut input = Vec::with_capacity(file.wires);
    for state in &file.input {
        let mut v = Vec::with_capacity(state.len());
        for lit in state {
            v.push(parse_literal(lit)?);
        }
        input.push(v);
    }
    let mut circuit = Circuit::new(group, input)?;
    let mut pending: Vec<(usize, usize)> = Vec::new(); // (after, wire)
    for m in &file.measure {
        pending.push((m.after.unwrap_or(file.gates.len()), m.wire));
    }
    for (pos, spec) in file.gates.iter().enumerate() {
        for &(after, wire) in &pending {
            if after == pos {
                circuit.mark_measurement(wire)?;
            }
        }
        let matrix = match (&spec.name, &spec.matrix) {
            (Some(n), _) => named_gate(n)?,
            (None, Some(rows)) => rows_to_matrix(rows, None)?,
            (None, None) => unreachable!("validated above"),
        };
        let wires = match spec.wires.as_slice() {
            [w] => GateWires::One(*w),
            [a, b] => GateWires::Two(*a, *b),
            _ => unreachable!("validated above"),
        };
        circuit.push_gate(matrix, wires)?;
    }
    for &(after, wire) in &pending {
        if after >= file.gates.len() {
            circuit.mark_measurement(wire)?;
        }
    }
    Ok(circuit)
}

// ---------------------------------------------------------------------------
// report serialisation
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct FoundRecord {
    pub matrix: Vec<Vec<String>>,
    pub assignment: Vec<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phase_function: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub entangling: Option<bool>,
    pub verified: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ReportFile {
    pub group_name: String,
    pub target: crate::normaliser::Target,
    pub mode: crate::normaliser::Mode,
    pub degenerate: bool,
    pub search_group_order: usize,
    pub found_count: usize,
    pub entangling_count: usize,
    pub stats: crate::normaliser::SearchStats,
    pub warnings: Vec<String>,
    pub found: Vec<FoundRecord>,
}

fn found_record(f: &FoundNormaliser) -> FoundRecord {
    FoundRecord {
        matrix: matrix_to_rows(&f.matrix),
        assignment: f.assignment.clone(),
        phase_function: f
            .phase_function
            .as_ref()
            .map(|ps| ps.iter().map(Cyclo::to_string).collect()),
        entangling: f.entangling,
        verified: f.verified,
    }
}

/// Stable structured form of a report; field order is fixed by the struct.
pub fn report_to_file(report: &NormaliserReport, group_name: &str, full: bool) -> ReportFile {
    ReportFile {
        group_name: group_name.to_string(),
        target: report.target,
        mode: report.mode,
        degenerate: report.degenerate,
        search_group_order: report.search_group.len(),
        found_count: report.found.len(),
        entangling_count: report
            .found
            .iter()
            .filter(|f| f.entangling == Some(true))
            .count(),
        stats: report.stats.clone(),
        warnings: report.warnings.clone(),
        found: if full {
            report.found.iter().map(found_record).collect()
        } else {
            report.found.iter().take(32).map(found_record).collect()
        },
    }
}
