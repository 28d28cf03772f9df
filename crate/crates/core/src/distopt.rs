//! Upper bounds on the trace distance to the private-state set by
//! derivative-free search over `(U₀₀, U₁₁, ρ_A'B')`.

use rand::Rng;
use rayon::prelude::*;

use crate::bounds::{self, BoundReport, BOUND_SLACK};
use crate::error::{Error, Result};
use crate::linalg::{self, exp_i_hermitian, hermitian_trace_norm, svd, trace_norm, ComplexMatrix};
use crate::pbit::{self, make_pbit, pbit_matrix, PbitParams};
use crate::qstate::{self, FactorLabel, Party, QuantumState};

/// Multiplier in the per-restart seed `base_seed·1000003 + index`.
pub const RESTART_SEED_STRIDE: u64 = 1_000_003;

/// Agreement required between the optimizer's running distance and the
/// final re-evaluation on the reconstructed pbit.
const REVERIFY_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptOptions {
    pub restarts: usize,
    pub max_iters: usize,
    pub init_step: f64,
    /// Consecutive rejections before the step is halved.
    pub stall_limit: usize,
    pub stop_step: f64,
    pub base_seed: u64,
}

impl Default for OptOptions {
    fn default() -> Self {
        Self {
            restarts: 16,
            max_iters: 2000,
            init_step: 0.3,
            stall_limit: 50,
            stop_step: 1e-4,
            base_seed: 0,
        }
    }
}

impl OptOptions {
    pub fn validate(&self) -> Result<()> {
        if self.restarts == 0 || self.max_iters == 0 || self.stall_limit == 0 {
            return Err(Error::Parameter("restarts, iterations and stall limit must be at least 1".into()));
        }
        if !(self.stop_step > 0.0 && self.stop_step < self.init_step && self.init_step.is_finite()) {
            return Err(Error::Parameter(format!(
                "need 0 < stop_step < init_step; got {} and {}",
                self.stop_step, self.init_step
            )));
        }
        Ok(())
    }

    pub fn restart_seed(&self, index: usize) -> u64 {
        self.base_seed
            .wrapping_mul(RESTART_SEED_STRIDE)
            .wrapping_add(index as u64)
    }
}

fn shield_labels(dims: (usize, usize)) -> Vec<FactorLabel> {
    vec![FactorLabel::shield(dims.0, Party::Alice), FactorLabel::shield(dims.1, Party::Bob)]
}

/// Pbit whose `A₀₀₁₁` block matches that of `s` as closely as the SVD
/// allows: `2·A₀₀₁₁ = WΣV†` gives `U₀₀ = W`, `U₁₁ = V`, `ρ = Σ/tr Σ`
/// (maximally mixed if `tr Σ` vanishes).
pub fn warm_start(s: &QuantumState) -> Result<PbitParams> {
    let form = pbit::blocks(s)?;
    let n = form.shield_dim();
    let dec = svd(&form.block(0, 0, 1, 1).scale_real(2.0))?;
    let total: f64 = dec.sigma.iter().sum();
    let shield = if total < 1e-12 {
        ComplexMatrix::identity(n).scale_real(1.0 / n as f64)
    } else {
        let w: Vec<f64> = dec.sigma.iter().map(|x| x / total).collect();
        ComplexMatrix::from_real_diag(&w)
    };
    let shield = QuantumState::new(shield, shield_labels(form.shield_dims))?;
    PbitParams::new(dec.w, dec.v, shield)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RestartRecord {
    pub index: usize,
    pub seed: u64,
    pub distance: f64,
    pub iterations: usize,
    /// Distance after every accepted move, starting with the initial point.
    pub accepted: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct UpperBound {
    /// `‖s − γ‖₁` re-evaluated on `make_pbit(best_params)`.
    pub upper: f64,
    pub best_params: PbitParams,
    pub best_restart: usize,
    pub per_restart: Vec<RestartRecord>,
}

/// Smallest trace distance from `s` to a private state found by
/// `opts.restarts` independent accept/reject searches (restart 0 from
/// [`warm_start`], others from random parameters).
pub fn distance_to_pbit_upper(s: &QuantumState, opts: &OptOptions) -> Result<UpperBound> {
    opts.validate()?;
    let form = pbit::blocks(s)?;
    let (da, db) = form.shield_dims;
    if da != db {
        return Err(Error::Parameter(format!("shield dimensions differ: {da} and {db}")));
    }
    let runs: Vec<(RestartRecord, PbitParams)> = (0..opts.restarts)
        .into_par_iter()
        .map(|i| run_restart(s, form.shield_dims, opts, i))
        .collect::<Result<_>>()?;

    // first minimum wins ties
    let best = runs
        .iter()
        .enumerate()
        .fold(0, |b, (i, r)| if r.0.distance < runs[b].0.distance { i } else { b });
    let best_params = runs[best].1.clone();
    let gamma = make_pbit(&best_params)?;
    let upper = trace_norm(&(s.matrix() - gamma.matrix()))?;
    let tracked = runs[best].0.distance;
    if (upper - tracked).abs() > REVERIFY_TOL {
        return Err(Error::InternalConsistency(format!(
            "re-evaluated distance {upper} disagrees with search value {tracked}"
        )));
    }
    Ok(UpperBound {
        upper,
        best_params,
        best_restart: best,
        per_restart: runs.into_iter().map(|r| r.0).collect(),
    })
}

fn distance(s: &ComplexMatrix, u00: &ComplexMatrix, u11: &ComplexMatrix, shield: &ComplexMatrix) -> Result<f64> {
    hermitian_trace_norm(&(s - &pbit_matrix(u00, u11, shield)))
}

fn random_hermitian<R: Rng + ?Sized>(n: usize, rng: &mut R) -> ComplexMatrix {
    let h = qstate::ginibre(n, n, rng).hermitian_part();
    let f = h.frobenius_norm();
    h.scale_real(1.0 / f)
}

fn run_restart(
    s: &QuantumState,
    dims: (usize, usize),
    opts: &OptOptions,
    index: usize,
) -> Result<(RestartRecord, PbitParams)> {
    let seed = opts.restart_seed(index);
    let mut rng = qstate::rng_from_seed(seed);
    let start = if index == 0 {
        warm_start(s)?
    } else {
        PbitParams::random(dims.0, dims.1, &mut rng)?
    };
    let n = dims.0 * dims.1;
    let target = s.matrix();
    let mut u00 = start.u00().clone();
    let mut u11 = start.u11().clone();
    let mut shield = start.shield().matrix().clone();
    let mut current = distance(target, &u00, &u11, &shield)?;
    let mut accepted = vec![current];
    let mut step = opts.init_step;
    let mut stall = 0;
    let mut iterations = 0;

    while iterations < opts.max_iters && step >= opts.stop_step {
        iterations += 1;
        let g0 = exp_i_hermitian(&random_hermitian(n, &mut rng).scale_real(step))?;
        let g1 = exp_i_hermitian(&random_hermitian(n, &mut rng).scale_real(step))?;
        let psi = qstate::random_unit_vector(n, &mut rng);
        let w = step / 4.0;
        let cand00 = g0.matmul(&u00)?;
        let cand11 = g1.matmul(&u11)?;
        let cand_shield = &shield.scale_real(1.0 - w) + &ComplexMatrix::outer(&psi, &psi).scale_real(w);
        let d = distance(target, &cand00, &cand11, &cand_shield)?;
        if d < current {
            u00 = cand00;
            u11 = cand11;
            shield = cand_shield;
            current = d;
            accepted.push(d);
            stall = 0;
        } else {
            stall += 1;
            if stall >= opts.stall_limit {
                step /= 2.0;
                stall = 0;
            }
        }
    }

    let shield_state = QuantumState::new(shield.hermitian_part(), shield_labels(dims))?;
    let params = PbitParams::new(u00, u11, shield_state)?;
    let record = RestartRecord {
        index,
        seed,
        distance: current,
        iterations,
        accepted,
    };
    Ok((record, params))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LowerSource {
    Prop1,
    Theorem1,
    Hphh,
}

impl LowerSource {
    pub fn as_str(&self) -> &'static str {
        match self {
            LowerSource::Prop1 => "prop1",
            LowerSource::Theorem1 => "theorem1",
            LowerSource::Hphh => "hphh",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SandwichResult {
    pub lower: f64,
    pub lower_source: LowerSource,
    pub upper: f64,
    pub best_params: PbitParams,
    pub best_restart: usize,
    pub per_restart: Vec<RestartRecord>,
    pub report: BoundReport,
}

/// Pairs the best analytic lower bound with the optimizer's upper bound;
/// `lower > upper + 1e-9` is an internal-consistency error.
pub fn sandwich(s: &QuantumState, opts: &OptOptions) -> Result<SandwichResult> {
    sandwich_with_report(s, bounds::theorem1_bound(s)?, opts)
}

/// As [`sandwich`] with a caller-supplied report (e.g. one carrying the
/// HPHH bound).
pub fn sandwich_with_report(s: &QuantumState, report: BoundReport, opts: &OptOptions) -> Result<SandwichResult> {
    let candidates = [
        (Some(report.prop1_lower), LowerSource::Prop1),
        (report.theorem1_lower, LowerSource::Theorem1),
        (report.hphh_lower, LowerSource::Hphh),
    ];
    let (lower, lower_source) = candidates
        .into_iter()
        .filter_map(|(v, src)| v.map(|v| (v, src)))
        .fold((f64::NEG_INFINITY, LowerSource::Prop1), |acc, x| if x.0 > acc.0 { x } else { acc });
    let ub = distance_to_pbit_upper(s, opts)?;
    if lower > ub.upper + BOUND_SLACK {
        return Err(Error::InternalConsistency(format!(
            "lower bound {lower} ({}) exceeds achieved distance {}",
            lower_source.as_str(),
            ub.upper
        )));
    }
    Ok(SandwichResult {
        lower,
        lower_source,
        upper: ub.upper,
        best_params: ub.best_params,
        best_restart: ub.best_restart,
        per_restart: ub.per_restart,
        report,
    })
}

/// `‖s − make_pbit(params)‖₁` via singular values.
pub fn distance_to(s: &QuantumState, params: &PbitParams) -> Result<f64> {
    linalg::trace_norm(&(s.matrix() - make_pbit(params)?.matrix()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::{cckkl_a_state, fourier_unitary, hphh_from_unitary, DEFAULT_DIM_CAP};
    use crate::qstate::rng_from_seed;
    use approx::assert_abs_diff_eq;

    fn quick(seed: u64) -> OptOptions {
        OptOptions {
            restarts: 3,
            max_iters: 150,
            base_seed: seed,
            ..OptOptions::default()
        }
    }

    #[test]
    fn options_validation() {
        assert!(OptOptions::default().validate().is_ok());
        let bad = OptOptions { restarts: 0, ..OptOptions::default() };
        assert!(bad.validate().is_err());
        let bad = OptOptions { stop_step: 0.5, ..OptOptions::default() };
        assert!(bad.validate().is_err());
        let o = OptOptions { base_seed: 7, ..OptOptions::default() };
        assert_eq!(o.restart_seed(2), 7 * 1_000_003 + 2);
        let o = OptOptions { base_seed: u64::MAX, ..OptOptions::default() };
        assert_eq!(o.restart_seed(0), u64::MAX.wrapping_mul(1_000_003));
    }

    #[test]
    fn warm_start_recovers_pbits() {
        let mut rng = rng_from_seed(2);
        for d in 2..=3 {
            let params = PbitParams::random(d, d, &mut rng).unwrap();
            let g = make_pbit(&params).unwrap();
            let ws = warm_start(&g).unwrap();
            assert!(distance_to(&g, &ws).unwrap() <= 1e-8);
        }
    }

    #[test]
    fn warm_start_on_uncorrelated_state() {
        let s = QuantumState::new(ComplexMatrix::identity(16).scale_real(1.0 / 16.0), qstate::abab_factors(2, 2)).unwrap();
        let ws = warm_start(&s).unwrap();
        assert!(ws.shield().matrix().max_abs_diff(&ComplexMatrix::identity(4).scale_real(0.25)) < 1e-15);
        assert!(distance_to(&s, &ws).unwrap() >= 1.0 - 1e-9);
    }

    #[test]
    fn exact_pbit_upper() {
        let g = make_pbit(&PbitParams::random(2, 2, &mut rng_from_seed(3)).unwrap()).unwrap();
        let ub = distance_to_pbit_upper(&g, &quick(1)).unwrap();
        assert!(ub.upper <= 1e-6);
        let sw = sandwich(&g, &quick(1)).unwrap();
        assert_abs_diff_eq!(sw.lower, 0.0, epsilon = 1e-10);
    }

    #[test]
    fn histories_strictly_decrease() {
        let s = qstate::random_density(16, 16, 4).unwrap().relabel(qstate::abab_factors(2, 2)).unwrap();
        let ub = distance_to_pbit_upper(&s, &quick(5)).unwrap();
        for r in &ub.per_restart {
            assert!(r.accepted.windows(2).all(|w| w[1] < w[0]));
            assert_eq!(*r.accepted.last().unwrap(), r.distance);
        }
        let best = ub.per_restart.iter().map(|r| r.distance).fold(f64::INFINITY, f64::min);
        assert_abs_diff_eq!(ub.upper, best, epsilon = 1e-8);
    }

    #[test]
    fn deterministic() {
        let s = qstate::random_density(16, 16, 6).unwrap().relabel(qstate::abab_factors(2, 2)).unwrap();
        let a = sandwich(&s, &quick(9)).unwrap();
        let b = sandwich(&s, &quick(9)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn maximally_mixed_upper() {
        let s = QuantumState::new(ComplexMatrix::identity(16).scale_real(1.0 / 16.0), qstate::abab_factors(2, 2)).unwrap();
        let sw = sandwich(&s, &quick(2)).unwrap();
        assert_eq!(sw.lower, 0.5);
        assert!(sw.upper >= 0.5);
    }

    #[test]
    fn family_sandwiches() {
        let h = hphh_from_unitary(&fourier_unitary(2).unwrap(), DEFAULT_DIM_CAP).unwrap();
        let report = bounds::theorem1_bound(&h).unwrap().with_hphh(2).unwrap();
        let sw = sandwich_with_report(&h, report, &quick(3)).unwrap();
        assert!(sw.lower >= 0.2071067811865 && sw.upper >= sw.lower);

        let c = cckkl_a_state(0.03, 0.03).unwrap();
        let sw = sandwich(&c, &quick(3)).unwrap();
        assert!(sw.lower >= 1.0 / 6.0 && sw.upper + 1e-9 >= sw.lower);
    }

    #[test]
    fn unequal_shields_rejected() {
        let s = qstate::random_density(24, 24, 1).unwrap().relabel(qstate::abab_factors(2, 3)).unwrap();
        assert!(matches!(distance_to_pbit_upper(&s, &quick(0)), Err(Error::Parameter(_))));
    }
}
