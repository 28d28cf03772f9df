//! JSON state files: factor labels, a row-major matrix of `[re, im]` pairs and a string metadata map.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use num_complex::Complex64;
use ppt_pbit::linalg::ComplexMatrix;
use ppt_pbit::qstate::{FactorLabel, Party, QuantumState, Role};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

pub const SCHEMA_VERSION: &str = "1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FactorEntry {
    pub dim: usize,
    pub owner: String,
    pub role: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateFile {
    pub schema_version: String,
    pub dims: Vec<FactorEntry>,
    pub matrix: Vec<Vec<[f64; 2]>>,
    #[serde(default)]
    pub metadata: BTreeMap<String, String>,
}

/// Matrix and labels that passed structural checks but not the density-operator checks.
#[derive(Debug, Clone)]
pub struct RawState {
    pub matrix: ComplexMatrix,
    pub factors: Vec<FactorLabel>,
    pub metadata: BTreeMap<String, String>,
}

fn party_name(p: Party) -> &'static str {
    match p {
        Party::Alice => "alice",
        Party::Bob => "bob",
        Party::Eve => "eve",
    }
}

fn role_name(r: Role) -> &'static str {
    match r {
        Role::Key => "key",
        Role::Shield => "shield",
        Role::Purifier => "purifier",
    }
}

fn parse_label(e: &FactorEntry) -> CliResult<FactorLabel> {
    let owner = match e.owner.as_str() {
        "alice" => Party::Alice,
        "bob" => Party::Bob,
        "eve" => Party::Eve,
        other => return Err(CliError::Malformed(format!("unknown owner {other:?}"))),
    };
    let role = match e.role.as_str() {
        "key" => Role::Key,
        "shield" => Role::Shield,
        "purifier" => Role::Purifier,
        other => return Err(CliError::Malformed(format!("unknown role {other:?}"))),
    };
    FactorLabel::new(e.dim, owner, role).map_err(|e| CliError::Malformed(e.to_string()))
}

pub fn matrix_to_rows(m: &ComplexMatrix) -> Vec<Vec<[f64; 2]>> {
    (0..m.rows())
        .map(|r| (0..m.cols()).map(|c| [m[(r, c)].re, m[(r, c)].im]).collect())
        .collect()
}

pub fn rows_to_matrix(rows: &[Vec<[f64; 2]>]) -> CliResult<ComplexMatrix> {
    let n = rows.len();
    let cols = rows.first().map_or(0, Vec::len);
    if n == 0 || cols == 0 {
        return Err(CliError::Malformed("empty matrix".into()));
    }
    let mut data = Vec::with_capacity(n * cols);
    for (r, row) in rows.iter().enumerate() {
        if row.len() != cols {
            return Err(CliError::Malformed(format!("row {r} has {} entries, expected {cols}", row.len())));
        }
        for &[re, im] in row {
            if !re.is_finite() || !im.is_finite() {
                return Err(CliError::Malformed(format!("non-finite entry in row {r}")));
            }
            data.push(Complex64::new(re, im));
        }
    }
    ComplexMatrix::new(n, cols, data).map_err(|e| CliError::Malformed(e.to_string()))
}

impl StateFile {
    pub fn from_state(s: &QuantumState, metadata: BTreeMap<String, String>) -> Self {
        StateFile {
            schema_version: SCHEMA_VERSION.into(),
            dims: s
                .factors()
                .iter()
                .map(|f| FactorEntry {
                    dim: f.dim,
                    owner: party_name(f.owner).into(),
                    role: role_name(f.role).into(),
                })
                .collect(),
            matrix: matrix_to_rows(s.matrix()),
            metadata,
        }
    }

    pub fn to_json(&self) -> CliResult<String> {
        if self.matrix.iter().flatten().flatten().any(|x| !x.is_finite()) {
            return Err(CliError::Computation("refusing to write non-finite matrix entries".into()));
        }
        let mut s = serde_json::to_string(self).map_err(|e| CliError::Computation(e.to_string()))?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> CliResult<Self> {
        let f: StateFile = serde_json::from_str(text).map_err(|e| CliError::Malformed(e.to_string()))?;
        if f.schema_version != SCHEMA_VERSION {
            return Err(CliError::Malformed(format!("unsupported schema_version {:?}", f.schema_version)));
        }
        Ok(f)
    }

    /// Structural checks only: square, finite, dimensions agree with the labels.
    pub fn to_raw(&self) -> CliResult<RawState> {
        let matrix = rows_to_matrix(&self.matrix)?;
        if !matrix.is_square() {
            return Err(CliError::Malformed(format!("matrix is {}x{}", matrix.rows(), matrix.cols())));
        }
        let factors = self.dims.iter().map(parse_label).collect::<CliResult<Vec<_>>>()?;
        let total = factors.iter().try_fold(1usize, |acc, f| acc.checked_mul(f.dim));
        if total != Some(matrix.rows()) {
            return Err(CliError::Malformed(format!(
                "factor dimensions do not multiply to the matrix size {}",
                matrix.rows()
            )));
        }
        Ok(RawState {
            matrix,
            factors,
            metadata: self.metadata.clone(),
        })
    }

    pub fn to_state(&self) -> CliResult<(QuantumState, BTreeMap<String, String>)> {
        let raw = self.to_raw()?;
        let s = QuantumState::new(raw.matrix, raw.factors).map_err(|e| CliError::Malformed(e.to_string()))?;
        Ok((s, raw.metadata))
    }
}

fn with_path(path: &Path) -> impl Fn(CliError) -> CliError + '_ {
    move |e| match e {
        CliError::Malformed(m) => CliError::Malformed(format!("{}: {m}", path.display())),
        other => other,
    }
}

pub fn read_file(path: &Path) -> CliResult<StateFile> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Malformed(format!("{}: {e}", path.display())))?;
    StateFile::from_json(&text).map_err(with_path(path))
}

pub fn read_state(path: &Path) -> CliResult<(QuantumState, BTreeMap<String, String>)> {
    read_file(path)?.to_state().map_err(with_path(path))
}

pub fn write_state(path: &Path, s: &QuantumState, metadata: BTreeMap<String, String>) -> CliResult<()> {
    let text = StateFile::from_state(s, metadata).to_json()?;
    fs::write(path, text).map_err(|e| CliError::Computation(format!("{}: {e}", path.display())))
}
