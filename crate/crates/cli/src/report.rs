use std::collections::BTreeMap;
use std::fs::OpenOptions;
use std::path::Path;

use ppt_pbit::bounds::BoundReport;
use serde::{Serialize, Serializer};

use crate::error::{CliError, CliResult};

/// Metadata keys that are not instance parameters.
const NON_PARAM_KEYS: [&str; 2] = ["family", "tool_version"];

/// Rounds to 12 significant digits; the shortest round-trip form of the result never exceeds 12 digits.
pub fn round_sig12(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.11e}").parse().unwrap_or(x)
}

fn sig12<S: Serializer>(x: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
    match x {
        Some(v) => s.serialize_f64(round_sig12(*v)),
        None => s.serialize_none(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    pub family: String,
    pub params: String,
    pub dims: String,
    pub is_ppt: Option<bool>,
    #[serde(serialize_with = "sig12")]
    pub min_pt_eig: Option<f64>,
    pub a0011_hermitian: Option<bool>,
    #[serde(serialize_with = "sig12")]
    pub a0011_norm: Option<f64>,
    #[serde(serialize_with = "sig12")]
    pub prop1_lower: Option<f64>,
    #[serde(serialize_with = "sig12")]
    pub theorem1_lower: Option<f64>,
    #[serde(serialize_with = "sig12")]
    pub hphh_lower: Option<f64>,
    #[serde(serialize_with = "sig12")]
    pub lemma1_margin: Option<f64>,
    #[serde(serialize_with = "sig12")]
    pub opt_upper: Option<f64>,
    pub seed: Option<u64>,
}

pub const HEADER: [&str; 13] = [
    "family",
    "params",
    "dims",
    "is_ppt",
    "min_pt_eig",
    "a0011_hermitian",
    "a0011_norm",
    "prop1_lower",
    "theorem1_lower",
    "hphh_lower",
    "lemma1_margin",
    "opt_upper",
    "seed",
];

pub fn params_string(metadata: &BTreeMap<String, String>) -> String {
    metadata
        .iter()
        .filter(|(k, _)| !NON_PARAM_KEYS.contains(&k.as_str()))
        .map(|(k, v)| format!("{k}={v}"))
        .collect::<Vec<_>>()
        .join(";")
}

pub fn dims_string(dims: &[usize]) -> String {
    dims.iter().map(usize::to_string).collect::<Vec<_>>().join("x")
}

impl ReportRow {
    pub fn from_report(family: &str, params: String, r: &BoundReport, seed: Option<u64>) -> Self {
        ReportRow {
            family: family.into(),
            params,
            dims: dims_string(&r.dims),
            is_ppt: Some(r.is_ppt),
            min_pt_eig: Some(r.min_pt_eigenvalue),
            a0011_hermitian: Some(r.a0011_hermitian),
            a0011_norm: Some(r.a0011_norm),
            prop1_lower: Some(r.prop1_lower),
            theorem1_lower: r.theorem1_lower,
            hphh_lower: r.hphh_lower,
            lemma1_margin: r.lemma1_margin,
            opt_upper: None,
            seed,
        }
    }

    /// A row carrying only identification; the numeric columns stay empty.
    pub fn error_row(family: &str, params: String, dims: String) -> Self {
        ReportRow {
            family: family.into(),
            params,
            dims,
            is_ppt: None,
            min_pt_eig: None,
            a0011_hermitian: None,
            a0011_norm: None,
            prop1_lower: None,
            theorem1_lower: None,
            hphh_lower: None,
            lemma1_margin: None,
            opt_upper: None,
            seed: None,
        }
    }
}

fn csv_err(e: impl std::fmt::Display) -> CliError {
    CliError::Computation(format!("csv: {e}"))
}

fn writer<W: std::io::Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .has_headers(false)
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(w)
}

pub fn write_rows<W: std::io::Write>(w: W, rows: &[ReportRow], header: bool) -> CliResult<()> {
    let mut wr = writer(w);
    if header {
        wr.write_record(HEADER).map_err(csv_err)?;
    }
    for row in rows {
        wr.serialize(row).map_err(csv_err)?;
    }
    wr.flush().map_err(csv_err)
}

pub fn to_csv_string(rows: &[ReportRow]) -> CliResult<String> {
    let mut buf = Vec::new();
    write_rows(&mut buf, rows, true)?;
    String::from_utf8(buf).map_err(csv_err)
}

/// Appends rows, writing the header first when the file is new or empty.
pub fn append_csv(path: &Path, rows: &[ReportRow]) -> CliResult<()> {
    let io = |e: std::io::Error| CliError::Computation(format!("{}: {e}", path.display()));
    let f = OpenOptions::new().create(true).append(true).open(path).map_err(io)?;
    let empty = f.metadata().map_err(io)?.len() == 0;
    write_rows(f, rows, empty)
}
