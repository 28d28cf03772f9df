use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use ppt_pbit::bounds::{is_ppt, theorem1_bound_with_tol, BoundReport};
use ppt_pbit::distopt::{sandwich_with_report, OptOptions, SandwichResult};
use ppt_pbit::families::{
    cckkl_a_power, cckkl_a_power_normalization, cckkl_a_state, cckkl_b_state, fourier_unitary, hhho_state,
    hphh_from_unitary, CckklParams, HhhoParams, HphhParams,
};
use ppt_pbit::linalg::{herm_eigvals, ComplexMatrix};
use ppt_pbit::pbit::{blocks, make_pbit, PbitParams};
use ppt_pbit::qstate::{rng_from_seed, QuantumState};
use serde::Deserialize;
use serde_json::{json, Value};

use crate::error::{CliError, CliResult, EXIT_MALFORMED, EXIT_OK};
use crate::report::{self, ReportRow};
use crate::statefile::{self, matrix_to_rows, rows_to_matrix, StateFile};
use crate::{BoundArgs, Cli, ConstructArgs, Family, InputArgs, OptimizeArgs, SweepArgs, SweepFamily, TOOL_VERSION};

/// Human-readable stderr lines; errors are kept under `--quiet`.
pub struct Log {
    quiet: bool,
    buf: String,
}

impl Log {
    pub fn new(quiet: bool) -> Self {
        Log {
            quiet,
            buf: String::new(),
        }
    }

    pub fn info(&mut self, msg: &str) {
        if !self.quiet {
            let _ = writeln!(self.buf, "{msg}");
        }
    }

    pub fn warn(&mut self, msg: &str) {
        if !self.quiet {
            let _ = writeln!(self.buf, "warning: {msg}");
        }
    }

    pub fn error(&mut self, msg: &str) {
        let _ = writeln!(self.buf, "error: {msg}");
    }

    pub fn into_string(self) -> String {
        self.buf
    }
}

type CmdResult = CliResult<(String, i32)>;

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json values always serialize");
    s.push('\n');
    s
}

/// Maps library failures on an already valid state: bad options stay parameter
/// errors, a violated bound is an internal-consistency failure, the rest are
/// computation failures.
fn compute_err(e: ppt_pbit::Error) -> CliError {
    use ppt_pbit::Error as E;
    match e {
        E::Parameter(_) | E::Dimension(_) | E::SizeCap { .. } => CliError::Parameter(e.to_string()),
        E::InternalConsistency(_) => CliError::Internal(e.to_string()),
        _ => CliError::Computation(e.to_string()),
    }
}

fn require<T>(v: Option<T>, flag: &str, family: Family) -> CliResult<T> {
    v.ok_or_else(|| CliError::Parameter(format!("{} requires --{flag}", family.name())))
}

fn reject_unused(a: &ConstructArgs, allowed: &[&str]) -> CliResult<()> {
    let given = [
        ("d", a.d.is_some()),
        ("l", a.l.is_some()),
        ("m", a.m.is_some()),
        ("n", a.n.is_some()),
        ("p", a.p.is_some()),
        ("q", a.q.is_some()),
        ("r", a.r.is_some()),
        ("unitary", a.unitary.is_some()),
    ];
    for (flag, set) in given {
        if set && !allowed.contains(&flag) {
            return Err(CliError::Parameter(format!("--{flag} does not apply to {}", a.family.name())));
        }
    }
    Ok(())
}

#[derive(Deserialize)]
struct UnitaryFile {
    matrix: Vec<Vec<[f64; 2]>>,
}

fn read_unitary(path: &Path) -> CliResult<ComplexMatrix> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Malformed(format!("{}: {e}", path.display())))?;
    let f: UnitaryFile = serde_json::from_str(&text).map_err(|e| CliError::Malformed(e.to_string()))?;
    rows_to_matrix(&f.matrix)
}

fn hphh_meta(meta: &mut BTreeMap<String, String>, u: &ComplexMatrix) -> CliResult<()> {
    let params = HphhParams::new(u.clone())?;
    meta.insert("d".into(), params.d().to_string());
    meta.insert("p".into(), params.p.to_string());
    meta.insert("w_norm".into(), params.w_norm.to_string());
    Ok(())
}

/// Builds the requested family state and its metadata.
pub fn build_family(cli: &Cli, a: &ConstructArgs, log: &mut Log) -> CliResult<(QuantumState, BTreeMap<String, String>)> {
    let f = a.family;
    let mut meta = BTreeMap::new();
    meta.insert("family".to_string(), f.name().to_string());
    meta.insert("tool_version".to_string(), TOOL_VERSION.to_string());
    let state = match f {
        Family::Hhho => {
            reject_unused(a, &["d", "l", "m", "p"])?;
            let params = HhhoParams::new(
                require(a.d, "d", f)?,
                a.l.unwrap_or(1),
                a.m.unwrap_or(1),
                require(a.p, "p", f)?,
            )?;
            meta.insert("d".into(), params.d.to_string());
            meta.insert("l".into(), params.l.to_string());
            meta.insert("m".into(), params.m.to_string());
            meta.insert("p".into(), params.p.to_string());
            hhho_state(&params, cli.dim_cap)?
        }
        Family::CckklA => {
            reject_unused(a, &["q", "r"])?;
            let (q, r) = (require(a.q, "q", f)?, require(a.r, "r", f)?);
            let params = CckklParams::class_a(q, r)?;
            meta.insert("q".into(), q.to_string());
            meta.insert("r".into(), r.to_string());
            meta.insert("p".into(), params.p.to_string());
            cckkl_a_state(q, r)?
        }
        Family::CckklAPower => {
            reject_unused(a, &["q", "r", "n"])?;
            let (q, r, n) = (require(a.q, "q", f)?, require(a.r, "r", f)?, require(a.n, "n", f)?);
            let s = cckkl_a_power(q, r, n, cli.dim_cap)?;
            let norm = cckkl_a_power_normalization(q, r, n)?;
            if norm.relative_gap() > 1e-12 {
                log.warn(&format!(
                    "closed-form normalization {} differs from the trace {}; the state is normalized by the trace",
                    norm.literal, norm.actual
                ));
            }
            meta.insert("q".into(), q.to_string());
            meta.insert("r".into(), r.to_string());
            meta.insert("n".into(), n.to_string());
            meta.insert("normalization_literal".into(), norm.literal.to_string());
            meta.insert("normalization_trace".into(), norm.actual.to_string());
            s
        }
        Family::CckklB => {
            reject_unused(a, &["q"])?;
            let q = require(a.q, "q", f)?;
            let params = CckklParams::class_b(q)?;
            meta.insert("q".into(), q.to_string());
            meta.insert("p".into(), params.p.to_string());
            cckkl_b_state(q, None)?
        }
        Family::HphhFourier => {
            reject_unused(a, &["d"])?;
            let u = fourier_unitary(require(a.d, "d", f)?)?;
            hphh_meta(&mut meta, &u)?;
            hphh_from_unitary(&u, cli.dim_cap)?
        }
        Family::HphhUnitaryFile => {
            reject_unused(a, &["unitary"])?;
            let path = require(a.unitary.as_ref(), "unitary", f)?;
            let u = read_unitary(path)?;
            hphh_meta(&mut meta, &u)?;
            meta.insert("unitary_file".into(), path.display().to_string());
            hphh_from_unitary(&u, cli.dim_cap)?
        }
        Family::PbitRandom => {
            reject_unused(a, &["d"])?;
            let d = require(a.d, "d", f)?;
            let total = d.checked_mul(d).and_then(|x| x.checked_mul(4));
            if total.is_none_or(|t| t > cli.dim_cap) {
                return Err(CliError::Parameter(format!("dimension 4*{d}^2 exceeds cap {}", cli.dim_cap)));
            }
            let params = PbitParams::random(d, d, &mut rng_from_seed(cli.seed))?;
            meta.insert("d".into(), d.to_string());
            meta.insert("seed".into(), cli.seed.to_string());
            make_pbit(&params)?
        }
    };
    Ok((state, meta))
}

pub fn construct(cli: &Cli, a: &ConstructArgs, log: &mut Log) -> CmdResult {
    let (s, meta) = build_family(cli, a, log)?;
    let n = s.dim();
    match &a.out {
        Some(path) => {
            statefile::write_state(path, &s, meta.clone())?;
            log.info(&format!("wrote {n}x{n} {} state to {}", a.family.name(), path.display()));
            let v = json!({
                "family": a.family.name(),
                "dim": n,
                "dims": s.dims(),
                "out": path.display().to_string(),
                "metadata": meta,
            });
            Ok((pretty(&v), EXIT_OK))
        }
        None => Ok((StateFile::from_state(&s, meta).to_json()?, EXIT_OK)),
    }
}

pub fn verify(cli: &Cli, a: &InputArgs, log: &mut Log) -> CmdResult {
    let raw = statefile::read_file(&a.input)?
        .to_raw()
        .map_err(|e| CliError::Malformed(format!("{}: {e}", a.input.display())))?;
    let m = &raw.matrix;
    let trace = m.trace().map_err(|e| CliError::Malformed(e.to_string()))?;
    let herm = m.hermiticity_residual();
    let min_eig = herm_eigvals(&m.hermitian_part()).map_err(|e| CliError::Computation(e.to_string()))?[0];
    let state = QuantumState::new(raw.matrix.clone(), raw.factors.clone());
    let mut v = json!({
        "path": a.input.display().to_string(),
        "dim": m.rows(),
        "trace": [trace.re, trace.im],
        "hermiticity_residual": herm,
        "min_eigenvalue": min_eig,
        "valid": state.is_ok(),
        "failure": state.as_ref().err().map(|e| e.to_string()),
        "is_ppt": Value::Null,
        "min_pt_eigenvalue": Value::Null,
        "a0011_hermitian": Value::Null,
        "a0011_hermiticity_residual": Value::Null,
    });
    log.info(&format!("trace                {} {:+}i", trace.re, trace.im));
    log.info(&format!("hermiticity residual {herm:e}"));
    log.info(&format!("min eigenvalue       {min_eig:e}"));
    let s = match state {
        Ok(s) => s,
        Err(e) => {
            log.info(&format!("invalid state: {e}"));
            return Ok((pretty(&v), EXIT_MALFORMED));
        }
    };
    let ppt = is_ppt(&s, cli.tol).map_err(compute_err)?;
    v["is_ppt"] = json!(ppt.is_ppt);
    v["min_pt_eigenvalue"] = json!(ppt.min_eigenvalue);
    log.info(&format!("PPT                  {} (min PT eigenvalue {:e})", ppt.is_ppt, ppt.min_eigenvalue));
    if let Ok(b) = blocks(&s) {
        let res = b.block(0, 0, 1, 1).hermiticity_residual();
        let hermitian = res <= ppt_pbit::tol::PSD_TOL;
        v["a0011_hermitian"] = json!(hermitian);
        v["a0011_hermiticity_residual"] = json!(res);
        log.info(&format!("A0011 Hermitian      {hermitian} (residual {res:e})"));
    } else {
        log.info("A0011                no key factors");
    }
    Ok((pretty(&v), EXIT_OK))
}

fn family_of(meta: &BTreeMap<String, String>) -> String {
    meta.get("family").cloned().unwrap_or_else(|| "unknown".into())
}

fn seed_of(meta: &BTreeMap<String, String>) -> Option<u64> {
    meta.get("seed").and_then(|s| s.parse().ok())
}

/// Bound report, with the HPHH bound attached when the metadata names an HPHH family.
pub fn report_for(cli: &Cli, s: &QuantumState, meta: &BTreeMap<String, String>) -> CliResult<BoundReport> {
    let r = theorem1_bound_with_tol(s, cli.tol).map_err(compute_err)?;
    let family = family_of(meta);
    if family == Family::HphhFourier.name() || family == Family::HphhUnitaryFile.name() {
        if let Some(d) = meta.get("d").and_then(|d| d.parse().ok()) {
            return r.with_hphh(d).map_err(compute_err);
        }
    }
    Ok(r)
}

pub fn report_json(r: &BoundReport) -> Value {
    json!({
        "dims": r.dims,
        "shield_dims": [r.shield_dims.0, r.shield_dims.1],
        "is_ppt": r.is_ppt,
        "min_pt_eigenvalue": r.min_pt_eigenvalue,
        "a0011_hermitian": r.a0011_hermitian,
        "a0011_hermiticity_residual": r.a0011_hermiticity_residual,
        "a0011_norm": r.a0011_norm,
        "prop1_lower": r.prop1_lower,
        "theorem1_lower": r.theorem1_lower,
        "theorem1_note": r.theorem1_note,
        "hphh_lower": r.hphh_lower,
        "lemma1_lhs": r.lemma1_lhs,
        "lemma1_rhs": r.lemma1_rhs,
        "theorem1_margin": r.theorem1_margin,
        "lemma1_margin": r.lemma1_margin,
        "hphh_margin": r.hphh_margin,
        "best_lower": r.best_lower(),
    })
}

fn log_report(log: &mut Log, r: &BoundReport) {
    let opt = |x: Option<f64>| x.map_or("n/a".to_string(), |v| v.to_string());
    log.info(&format!("PPT            {} (min PT eigenvalue {:e})", r.is_ppt, r.min_pt_eigenvalue));
    log.info(&format!("A0011 norm     {} (Hermitian {})", r.a0011_norm, r.a0011_hermitian));
    log.info(&format!("prop1 lower    {}", r.prop1_lower));
    log.info(&format!("theorem1 lower {}", opt(r.theorem1_lower)));
    if let Some(note) = &r.theorem1_note {
        log.info(&format!("               {note}"));
    }
    log.info(&format!("hphh lower     {}", opt(r.hphh_lower)));
    log.info(&format!("lemma1 margin  {}", opt(r.lemma1_margin)));
}

pub fn bound(cli: &Cli, a: &BoundArgs, log: &mut Log) -> CmdResult {
    let (s, meta) = statefile::read_state(&a.input)?;
    let r = report_for(cli, &s, &meta)?;
    let row = ReportRow::from_report(&family_of(&meta), report::params_string(&meta), &r, seed_of(&meta));
    log_report(log, &r);
    if let Some(path) = &a.csv {
        report::append_csv(path, std::slice::from_ref(&row))?;
        log.info(&format!("appended row to {}", path.display()));
    }
    let stdout = if a.json || a.csv.is_none() {
        pretty(&json!({ "row": row, "report": report_json(&r) }))
    } else {
        String::new()
    };
    Ok((stdout, EXIT_OK))
}

pub fn sandwich_json(res: &SandwichResult, row: &ReportRow) -> Value {
    let per_restart: Vec<Value> = res
        .per_restart
        .iter()
        .map(|r| {
            json!({
                "index": r.index,
                "seed": r.seed,
                "distance": r.distance,
                "iterations": r.iterations,
                "accepted_moves": r.accepted.len(),
            })
        })
        .collect();
    json!({
        "lower": res.lower,
        "lower_source": res.lower_source.as_str(),
        "upper": res.upper,
        "gap": res.upper - res.lower,
        "best_restart": res.best_restart,
        "per_restart": per_restart,
        "best_pbit": {
            "u00": matrix_to_rows(res.best_params.u00()),
            "u11": matrix_to_rows(res.best_params.u11()),
            "shield": matrix_to_rows(res.best_params.shield().matrix()),
        },
        "report": report_json(&res.report),
        "row": row,
    })
}

pub fn optimize(cli: &Cli, a: &OptimizeArgs, log: &mut Log) -> CmdResult {
    let (s, meta) = statefile::read_state(&a.input)?;
    let opts = OptOptions {
        restarts: a.restarts,
        max_iters: a.iters,
        base_seed: cli.seed,
        ..OptOptions::default()
    };
    opts.validate()?;
    let r = report_for(cli, &s, &meta)?;
    let res = sandwich_with_report(&s, r, &opts).map_err(compute_err)?;
    let mut row = ReportRow::from_report(&family_of(&meta), report::params_string(&meta), &res.report, Some(cli.seed));
    row.opt_upper = Some(res.upper);
    log.info(&format!(
        "lower {} ({}) <= upper {} (restart {})",
        res.lower,
        res.lower_source.as_str(),
        res.upper,
        res.best_restart
    ));
    if let Some(path) = &a.csv {
        report::append_csv(path, std::slice::from_ref(&row))?;
    }
    Ok((pretty(&sandwich_json(&res, &row)), EXIT_OK))
}

pub fn parse_range(text: &str) -> CliResult<(usize, usize)> {
    let bad = || CliError::Parameter(format!("range must look like lo..hi, got {text:?}"));
    let (lo, hi) = text.split_once("..").ok_or_else(bad)?;
    let lo: usize = lo.trim().parse().map_err(|_| bad())?;
    let hi: usize = hi.trim().parse().map_err(|_| bad())?;
    if lo > hi {
        return Err(CliError::Parameter(format!("empty range {text:?}")));
    }
    Ok((lo, hi))
}

pub fn sweep(cli: &Cli, a: &SweepArgs, log: &mut Log) -> CmdResult {
    let (lo, hi) = parse_range(&a.d_range)?;
    if lo < 2 {
        return Err(CliError::Parameter(format!("shield dimension must be at least 2, got {lo}")));
    }
    let family = match a.family {
        SweepFamily::HphhFourier => Family::HphhFourier,
    };
    let mut rows = Vec::new();
    for d in lo..=hi {
        let construct = ConstructArgs {
            family,
            d: Some(d),
            l: None,
            m: None,
            n: None,
            p: None,
            q: None,
            r: None,
            unitary: None,
            out: None,
        };
        let row = build_family(cli, &construct, log)
            .and_then(|(s, meta)| {
                let r = report_for(cli, &s, &meta)?;
                Ok(ReportRow::from_report(family.name(), report::params_string(&meta), &r, None))
            });
        match row {
            Ok(row) => rows.push(row),
            Err(CliError::Internal(msg)) => return Err(CliError::Internal(msg)),
            Err(e) => {
                log.warn(&format!("d={d}: {e}"));
                let dim = d.saturating_mul(d).saturating_mul(4);
                rows.push(ReportRow::error_row(
                    family.name(),
                    format!("d={d};error={e}"),
                    format!("2x2x{d}x{d} ({dim})"),
                ));
            }
        }
    }
    if let Some(path) = &a.csv {
        fs::write(path, report::to_csv_string(&rows)?)
            .map_err(|e| CliError::Computation(format!("{}: {e}", path.display())))?;
        log.info(&format!("wrote {} rows to {}", rows.len(), path.display()));
    }
    let stdout = if a.json || a.csv.is_none() {
        pretty(&json!(rows))
    } else {
        String::new()
    };
    Ok((stdout, EXIT_OK))
}
