//! PPT test, Bell twirl and the dimension-dependent distance bounds.

use rand::Rng;
use rand_distr::{Distribution, Exp1};

use crate::error::{Error, Result};
use crate::linalg::{herm_eigvals, trace_norm, ComplexMatrix};
use crate::pbit::{self, BlockForm};
use crate::qstate::{self, partial_transpose, QuantumState, Selector};
use crate::tol;

/// Slack for comparing a computed quantity against a proven bound.
pub const BOUND_SLACK: f64 = 1e-9;
/// Entrywise tolerance for `A₀₀₁₁ = A₀₀₁₁†` and for block-form checks.
pub const FORM_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PptVerdict {
    pub is_ppt: bool,
    pub min_eigenvalue: f64,
}

/// Partial transpose over every Bob factor; PPT iff the smallest
/// eigenvalue is at least `−tol·dim`.
pub fn is_ppt(s: &QuantumState, tol: f64) -> Result<PptVerdict> {
    let pt = partial_transpose(s, &Selector::default())?;
    let min_eigenvalue = herm_eigvals(&pt.matrix)?[0];
    Ok(PptVerdict {
        is_ppt: min_eigenvalue >= -tol * s.dim() as f64,
        min_eigenvalue,
    })
}

/// Projection onto Bell-diagonal block form: corners become
/// `(A₀₀₁₁+A₁₁₀₀)/2`, outer diagonal blocks `(A₀₀₀₀+A₁₁₁₁)/2`, inner
/// diagonal blocks `(A₀₁₀₁+A₁₀₁₀)/2`, everything else zero.
///
/// Equals the uniform average of conjugations of the key qubits by
/// `{I, Z⊗Z, X⊗X, XZ⊗XZ} · {I, S⊗S†}`, all local unitaries, so it maps
/// states to states and PPT states to PPT states.
pub fn bell_twirl(s: &QuantumState) -> Result<QuantumState> {
    let f = pbit::blocks(s)?;
    let d = f.shield_dim();
    let avg = |a: &ComplexMatrix, b: &ComplexMatrix| (a + b).scale_real(0.5);
    let outer = avg(f.block(0, 0, 0, 0), f.block(1, 1, 1, 1));
    let inner = avg(f.block(0, 1, 0, 1), f.block(1, 0, 1, 0));
    let corner = avg(f.block(0, 0, 1, 1), f.block(1, 1, 0, 0));
    let mut blocks: [[ComplexMatrix; 4]; 4] =
        std::array::from_fn(|_| std::array::from_fn(|_| ComplexMatrix::zeros(d, d)));
    blocks[0][0] = outer.clone();
    blocks[3][3] = outer;
    blocks[1][1] = inner.clone();
    blocks[2][2] = inner;
    blocks[0][3] = corner.clone();
    blocks[3][0] = corner;
    let form = BlockForm::from_blocks(blocks, f.shield_dims)?;
    Ok(QuantumState::new_trusted(form.reassemble(), s.factors().to_vec()))
}

/// Operators `σᵢ` on `A'B'` of a Bell-diagonal block state
/// `Σ |Bellᵢ⟩⟨Bellᵢ| ⊗ σᵢ` (order `φ⁺, φ⁻, ψ⁺, ψ⁻`). `sigma3` is `None`
/// when both `ψ` components carry the same operator.
#[derive(Debug, Clone, PartialEq)]
pub struct SigmaBlocks {
    pub sigma0: ComplexMatrix,
    pub sigma1: ComplexMatrix,
    pub sigma2: ComplexMatrix,
    pub sigma3: Option<ComplexMatrix>,
    pub shield_dims: (usize, usize),
}

impl SigmaBlocks {
    /// Rebuilds the block matrix from the `σᵢ`.
    pub fn reassemble(&self) -> ComplexMatrix {
        let d = self.sigma0.rows();
        let s3 = self.sigma3.as_ref().unwrap_or(&self.sigma2);
        let half = |m: ComplexMatrix| m.scale_real(0.5);
        let mut blocks: [[ComplexMatrix; 4]; 4] =
            std::array::from_fn(|_| std::array::from_fn(|_| ComplexMatrix::zeros(d, d)));
        let plus01 = half(&self.sigma0 + &self.sigma1);
        let minus01 = half(&self.sigma0 - &self.sigma1);
        let plus23 = half(&self.sigma2 + s3);
        let minus23 = half(&self.sigma2 - s3);
        blocks[0][0] = plus01.clone();
        blocks[3][3] = plus01;
        blocks[0][3] = minus01.clone();
        blocks[3][0] = minus01;
        blocks[1][1] = plus23.clone();
        blocks[2][2] = plus23;
        blocks[1][2] = minus23.clone();
        blocks[2][1] = minus23;
        BlockForm {
            blocks,
            shield_dims: self.shield_dims,
        }
        .reassemble()
    }

    pub fn total_trace(&self) -> f64 {
        let tr = |m: &ComplexMatrix| m.trace().expect("square").re;
        match &self.sigma3 {
            None => tr(&self.sigma0) + tr(&self.sigma1) + 2.0 * tr(&self.sigma2),
            Some(s3) => tr(&self.sigma0) + tr(&self.sigma1) + tr(&self.sigma2) + tr(s3),
        }
    }
}

/// Inverts the Bell-diagonal block form. Errors with a shape error when
/// `s` is not of that form within [`FORM_TOL`].
pub fn sigma_blocks(s: &QuantumState) -> Result<SigmaBlocks> {
    let f = pbit::blocks(s)?;
    let allowed = |a: usize, b: usize| {
        a == b || (a == 0 && b == 3) || (a == 3 && b == 0) || (a == 1 && b == 2) || (a == 2 && b == 1)
    };
    for a in 0..4 {
        for b in 0..4 {
            if !allowed(a, b) && f.blocks[a][b].max_abs() > FORM_TOL {
                return Err(Error::Shape(format!(
                    "block ({a},{b}) is non-zero; not in Bell-diagonal block form"
                )));
            }
        }
    }
    let pairs = [((0, 0), (3, 3)), ((0, 3), (3, 0)), ((1, 1), (2, 2)), ((1, 2), (2, 1))];
    for ((a, b), (c, e)) in pairs {
        if f.blocks[a][b].max_abs_diff(&f.blocks[c][e]) > FORM_TOL {
            return Err(Error::Shape(format!(
                "blocks ({a},{b}) and ({c},{e}) differ; not in Bell-diagonal block form"
            )));
        }
    }
    let outer = &f.blocks[0][0];
    let corner = &f.blocks[0][3];
    let inner = &f.blocks[1][1];
    let cross = &f.blocks[1][2];
    let (sigma2, sigma3) = if cross.max_abs() > FORM_TOL {
        (inner + cross, Some(inner - cross))
    } else {
        (inner.clone(), None)
    };
    Ok(SigmaBlocks {
        sigma0: outer + corner,
        sigma1: outer - corner,
        sigma2,
        sigma3,
        shield_dims: f.shield_dims,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lemma1Record {
    /// `‖σ₀ − σ₁‖₁`
    pub lhs: f64,
    /// `1 − 1/(d+1)`
    pub rhs: f64,
    pub margin: f64,
}

/// `‖σ₀ − σ₁‖₁ ≤ 1 − 1/(d+1)` for a PPT Bell-diagonal block state, with
/// `d` the larger shield dimension.
pub fn lemma1_check(s: &QuantumState) -> Result<Lemma1Record> {
    lemma1_check_with_tol(s, tol::PSD_TOL)
}

pub fn lemma1_check_with_tol(s: &QuantumState, ppt_tol: f64) -> Result<Lemma1Record> {
    let sig = sigma_blocks(s)?;
    let v = is_ppt(s, ppt_tol)?;
    if !v.is_ppt {
        return Err(Error::Precondition(format!(
            "state is not PPT (min PT eigenvalue {:e})",
            v.min_eigenvalue
        )));
    }
    let d = sig.shield_dims.0.max(sig.shield_dims.1) as f64;
    let lhs = trace_norm(&(&sig.sigma0 - &sig.sigma1))?;
    let rhs = 1.0 - 1.0 / (d + 1.0);
    Ok(Lemma1Record {
        lhs,
        rhs,
        margin: rhs - lhs,
    })
}

/// `1/(2(d+1))`
pub fn theorem1_value(d: usize) -> f64 {
    1.0 / (2.0 * (d as f64 + 1.0))
}

/// `1/(2(√d+1))`, never below [`theorem1_value`].
pub fn hphh_bound(d: usize) -> f64 {
    1.0 / (2.0 * ((d as f64).sqrt() + 1.0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub dims: Vec<usize>,
    pub shield_dims: (usize, usize),
    pub is_ppt: bool,
    pub min_pt_eigenvalue: f64,
    pub a0011_hermitian: bool,
    pub a0011_hermiticity_residual: f64,
    pub a0011_norm: f64,
    pub prop1_lower: f64,
    pub theorem1_lower: Option<f64>,
    /// Why `theorem1_lower` is absent, when it is.
    pub theorem1_note: Option<String>,
    pub hphh_lower: Option<f64>,
    pub lemma1_lhs: Option<f64>,
    pub lemma1_rhs: Option<f64>,
    /// `(½ − theorem1_lower) − a0011_norm`
    pub theorem1_margin: Option<f64>,
    pub lemma1_margin: Option<f64>,
    /// `(½ − hphh_lower) − a0011_norm`
    pub hphh_margin: Option<f64>,
}

impl BoundReport {
    /// Largest applicable analytic lower bound on the distance to a pbit.
    pub fn best_lower(&self) -> f64 {
        [Some(self.prop1_lower), self.theorem1_lower, self.hphh_lower]
            .into_iter()
            .flatten()
            .fold(0.0, f64::max)
    }

    /// Records the HPHH-family bound for shield dimension `d`. Only valid
    /// for states built from `W_U`; the caller vouches for provenance.
    pub fn with_hphh(mut self, d: usize) -> Result<Self> {
        let lower = hphh_bound(d);
        let margin = 0.5 - lower - self.a0011_norm;
        if margin < -BOUND_SLACK {
            return Err(Error::InternalConsistency(format!(
                "‖A0011‖ = {} exceeds 1/2 - 1/(2(√d+1)) = {}",
                self.a0011_norm,
                0.5 - lower
            )));
        }
        self.hphh_lower = Some(lower);
        self.hphh_margin = Some(margin);
        Ok(self)
    }
}

/// Evaluates every bound that applies to `s`.
///
/// The bound `1/(2(d+1))` applies when `s` is PPT, its `A₀₀₁₁`
/// is Hermitian and `d_A' = d_B' = d`; a violation of the implied
/// `‖A₀₀₁₁‖ ≤ ½ − 1/(2(d+1))` is reported as an internal-consistency error.
pub fn theorem1_bound(s: &QuantumState) -> Result<BoundReport> {
    theorem1_bound_with_tol(s, tol::PSD_TOL)
}

/// [`theorem1_bound`] with an explicit PPT tolerance (scaled by dimension).
pub fn theorem1_bound_with_tol(s: &QuantumState, ppt_tol: f64) -> Result<BoundReport> {
    let form = pbit::blocks(s)?;
    let a = form.block(0, 0, 1, 1);
    let herm_res = a.hermiticity_residual();
    let a0011_hermitian = herm_res <= FORM_TOL;
    let a0011_norm = trace_norm(a)?;
    let ppt = is_ppt(s, ppt_tol)?;
    let (da, db) = form.shield_dims;

    let mut report = BoundReport {
        dims: s.dims(),
        shield_dims: form.shield_dims,
        is_ppt: ppt.is_ppt,
        min_pt_eigenvalue: ppt.min_eigenvalue,
        a0011_hermitian,
        a0011_hermiticity_residual: herm_res,
        a0011_norm,
        prop1_lower: (0.5 - a0011_norm).max(0.0),
        theorem1_lower: None,
        theorem1_note: None,
        hphh_lower: None,
        lemma1_lhs: None,
        lemma1_rhs: None,
        theorem1_margin: None,
        lemma1_margin: None,
        hphh_margin: None,
    };

    if ppt.is_ppt {
        let lemma = lemma1_check_with_tol(&bell_twirl(s)?, ppt_tol)?;
        report.lemma1_lhs = Some(lemma.lhs);
        report.lemma1_rhs = Some(lemma.rhs);
        report.lemma1_margin = Some(lemma.margin);
    }

    let note = if !ppt.is_ppt {
        Some("state is not PPT".to_string())
    } else if !a0011_hermitian {
        Some(format!("A0011 is not Hermitian (residual {herm_res:e})"))
    } else if da != db {
        Some(format!("unequal shield dimensions {da} and {db}"))
    } else {
        None
    };
    match note {
        Some(n) => report.theorem1_note = Some(n),
        None => {
            let lower = theorem1_value(da);
            let margin = 0.5 - lower - a0011_norm;
            if margin < -BOUND_SLACK {
                return Err(Error::InternalConsistency(format!(
                    "PPT state with Hermitian A0011 has ‖A0011‖ = {a0011_norm} > {}",
                    0.5 - lower
                )));
            }
            report.theorem1_lower = Some(lower);
            report.theorem1_margin = Some(margin);
        }
    }
    Ok(report)
}

/// Random PPT Bell-diagonal block state on shield `C^d ⊗ C^d`.
///
/// Weights `(w₀, w₁, w₂)` with `w₀ + w₁ + 2w₂ = 1` come from a flat
/// Dirichlet draw; each `σᵢ = wᵢ(½ρᵢ + ½I/d²)` for a full-rank random `ρᵢ`.
/// Candidates are drawn until one passes the PPT test.
pub fn sample_ppt_belldia(d_shield: usize, seed: u64, max_attempts: usize) -> Result<QuantumState> {
    if max_attempts == 0 {
        return Err(Error::Parameter("max_attempts must be at least 1".into()));
    }
    if d_shield == 0 {
        return Err(Error::Parameter("shield dimension must be at least 1".into()));
    }
    let mut rng = qstate::rng_from_seed(seed);
    for _ in 0..max_attempts {
        let s = belldia_candidate(d_shield, &mut rng)?;
        if is_ppt(&s, tol::PSD_TOL)?.is_ppt {
            return Ok(s);
        }
    }
    Err(Error::Sampling(max_attempts))
}

fn belldia_candidate<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Result<QuantumState> {
    let n = d * d;
    let g: [f64; 3] = std::array::from_fn(|_| Exp1.sample(rng));
    let total: f64 = g.iter().sum();
    let w = [g[0] / total, g[1] / total, g[2] / (2.0 * total)];
    let mixed = ComplexMatrix::identity(n).scale_real(0.5 / n as f64);
    let [sigma0, sigma1, sigma2] = w.map(|wi| {
        let rho = qstate::random_density_matrix(n, n, rng);
        (&rho.scale_real(0.5) + &mixed).scale_real(wi)
    });
    let form = SigmaBlocks {
        sigma0,
        sigma1,
        sigma2,
        sigma3: None,
        shield_dims: (d, d),
    };
    QuantumState::new(form.reassemble(), qstate::abab_factors(d, d))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::{self, cckkl_a_state, fourier_unitary, hphh_from_unitary, DEFAULT_DIM_CAP};
    use crate::linalg::{C64, ONE};
    use crate::pbit::{a0011_norm, make_pbit, PbitParams};
    use crate::qstate::{bell_state, rng_from_seed, BellKind, FactorLabel, Party};
    use approx::assert_abs_diff_eq;

    fn with_shield(key: &QuantumState, sigma: &ComplexMatrix) -> QuantumState {
        let mut f = key.factors().to_vec();
        let d = (sigma.rows() as f64).sqrt() as usize;
        f.push(FactorLabel::shield(d, Party::Alice));
        f.push(FactorLabel::shield(d, Party::Bob));
        QuantumState::new(key.matrix().kron(sigma), f).unwrap()
    }

    #[test]
    fn ppt_cases() {
        let prod = QuantumState::new(
            ComplexMatrix::from_real_diag(&[0.5, 0.0, 0.0, 0.5]),
            qstate::abab_factors(1, 1)[..2].to_vec(),
        )
        .unwrap();
        assert!(is_ppt(&prod, 1e-10).unwrap().is_ppt);
        let bell = bell_state(BellKind::PhiPlus).to_density();
        let v = is_ppt(&bell, 1e-10).unwrap();
        assert!(!v.is_ppt);
        assert_abs_diff_eq!(v.min_eigenvalue, -0.5, epsilon = 1e-14);
        let h = hphh_from_unitary(&fourier_unitary(2).unwrap(), DEFAULT_DIM_CAP).unwrap();
        let v = is_ppt(&h, 1e-10).unwrap();
        assert!(v.is_ppt && v.min_eigenvalue >= -1e-12);
    }

    #[test]
    fn twirl_cases() {
        let mut rng = rng_from_seed(4);
        let shield = qstate::random_density_with(4, 4, &mut rng)
            .unwrap()
            .relabel(qstate::abab_factors(2, 2)[2..].to_vec())
            .unwrap();
        let id = ComplexMatrix::identity(4);
        let g = make_pbit(&PbitParams::new(id.clone(), id, shield).unwrap()).unwrap();
        assert!(bell_twirl(&g).unwrap().matrix().max_abs_diff(g.matrix()) <= 1e-15);

        let s = qstate::random_density_with(16, 16, &mut rng).unwrap().relabel(qstate::abab_factors(2, 2)).unwrap();
        let t = bell_twirl(&s).unwrap();
        let tt = bell_twirl(&t).unwrap();
        assert!(tt.matrix().max_abs_diff(t.matrix()) <= 1e-15);
        assert_abs_diff_eq!(t.matrix().trace().unwrap().re, 1.0, epsilon = 1e-12);
        assert!(herm_eigvals(t.matrix()).unwrap()[0] > -1e-12);
    }

    #[test]
    fn sigma_recovery() {
        let s = cckkl_a_state(0.03, 0.03).unwrap();
        let sig = sigma_blocks(&s).unwrap();
        let p = families::CckklParams::class_a(0.03, 0.03).unwrap().p;
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let phip = [C64::new(h, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(h, 0.0)];
        let mut s0 = ComplexMatrix::outer(&phip, &phip);
        s0[(1, 1)] += ONE;
        assert!(sig.sigma0.max_abs_diff(&s0.scale_real(p)) < 1e-10);
        let s2 = ComplexMatrix::from_real_diag(&[0.03, p * h, p * h, 0.03]);
        assert!(sig.sigma2.max_abs_diff(&s2) < 1e-10);
        assert!(sig.sigma3.is_none());
        assert_abs_diff_eq!(sig.total_trace(), 1.0, epsilon = 1e-12);
        assert!(sig.reassemble().max_abs_diff(s.matrix()) < 1e-15);

        let sigma = qstate::random_density(4, 4, 5).unwrap();
        let bs = with_shield(&bell_state(BellKind::PhiPlus).to_density(), sigma.matrix());
        let sig = sigma_blocks(&bs).unwrap();
        assert!(sig.sigma0.max_abs_diff(sigma.matrix()) < 1e-15);
        assert_eq!(sig.sigma1.max_abs(), 0.0);
        assert_eq!(sig.sigma2.max_abs(), 0.0);

        let b = families::cckkl_b_state(0.05, None).unwrap();
        let sig = sigma_blocks(&b).unwrap();
        assert!(sig.sigma3.is_some());
        assert!(sig.reassemble().max_abs_diff(b.matrix()) < 1e-15);

        let r = qstate::random_density(16, 16, 6).unwrap().relabel(qstate::abab_factors(2, 2)).unwrap();
        assert!(matches!(sigma_blocks(&r), Err(Error::Shape(_))));
    }

    #[test]
    fn lemma1_cases() {
        let s = cckkl_a_state(0.03, 0.03).unwrap();
        let rec = lemma1_check(&s).unwrap();
        assert_abs_diff_eq!(rec.lhs, 0.5154920651116763, epsilon = 1e-12);
        assert_abs_diff_eq!(rec.rhs, 2.0 / 3.0, epsilon = 1e-15);
        assert!(rec.margin > 0.0);

        // σ₀ = σ₁ = product state: separable
        let a = qstate::random_density(2, 2, 8).unwrap().into_matrix();
        let b = qstate::random_density(2, 2, 18).unwrap().into_matrix();
        let sig = a.kron(&b).scale_real(0.5);
        let sb = SigmaBlocks {
            sigma0: sig.clone(),
            sigma1: sig,
            sigma2: ComplexMatrix::zeros(4, 4),
            sigma3: None,
            shield_dims: (2, 2),
        };
        let st = QuantumState::new(sb.reassemble(), qstate::abab_factors(2, 2)).unwrap();
        assert_abs_diff_eq!(lemma1_check(&st).unwrap().lhs, 0.0, epsilon = 1e-15);

        let bell = with_shield(&bell_state(BellKind::PhiPlus).to_density(), &ComplexMatrix::identity(4).scale_real(0.25));
        assert!(matches!(lemma1_check(&bell), Err(Error::Precondition(_))));
    }

    #[test]
    fn theorem1_cases() {
        let r = theorem1_bound(&cckkl_a_state(0.03, 0.03).unwrap()).unwrap();
        assert!(r.is_ppt && r.a0011_hermitian);
        assert_abs_diff_eq!(r.theorem1_lower.unwrap(), 1.0 / 6.0, epsilon = 1e-15);
        assert!(r.theorem1_margin.unwrap() >= 0.0);
        assert!(r.lemma1_margin.unwrap() >= 0.0);
        assert!(r.best_lower() >= 1.0 / 6.0);

        let g = make_pbit(&PbitParams::random(2, 2, &mut rng_from_seed(9)).unwrap()).unwrap();
        let r = theorem1_bound(&g).unwrap();
        assert!(!r.is_ppt && r.theorem1_lower.is_none());
        assert_abs_diff_eq!(r.prop1_lower, 0.0, epsilon = 1e-10);

        // the d = 2 Fourier matrix is Hermitian, so W_U and A0011 are too
        let h = hphh_from_unitary(&fourier_unitary(2).unwrap(), DEFAULT_DIM_CAP).unwrap();
        let r = theorem1_bound(&h).unwrap().with_hphh(2).unwrap();
        assert!(r.is_ppt && r.a0011_hermitian);
        assert_abs_diff_eq!(r.hphh_margin.unwrap(), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r.best_lower(), hphh_bound(2), epsilon = 1e-12);

        let h = hphh_from_unitary(&fourier_unitary(3).unwrap(), DEFAULT_DIM_CAP).unwrap();
        let r = theorem1_bound(&h).unwrap();
        assert!(r.is_ppt && !r.a0011_hermitian && r.theorem1_lower.is_none());
        assert!(r.a0011_norm <= 0.5 - hphh_bound(3) + 1e-9);

        let b = families::cckkl_b_state(0.05, None).unwrap();
        let r = theorem1_bound(&b).unwrap();
        assert!(!r.is_ppt && r.theorem1_note.is_some());
    }

    #[test]
    fn hphh_bound_values() {
        assert_abs_diff_eq!(hphh_bound(2), 0.20710678118654752, epsilon = 1e-15);
        assert_abs_diff_eq!(hphh_bound(4), 1.0 / 6.0, epsilon = 1e-15);
        for d in 2..16 {
            assert!(hphh_bound(d + 1) < hphh_bound(d));
            assert!(hphh_bound(d) >= theorem1_value(d));
        }
    }

    #[test]
    fn sampler() {
        for seed in 0..10 {
            let s = sample_ppt_belldia(2, seed, 1000).unwrap();
            assert!(is_ppt(&s, 1e-10).unwrap().is_ppt);
            let rec = lemma1_check(&s).unwrap();
            assert!(rec.margin >= -1e-9);
            assert_abs_diff_eq!(a0011_norm(&s).unwrap(), rec.lhs / 2.0, epsilon = 1e-10);
        }
        assert_eq!(sample_ppt_belldia(2, 3, 1000).unwrap(), sample_ppt_belldia(2, 3, 1000).unwrap());
        assert!(matches!(sample_ppt_belldia(2, 3, 0), Err(Error::Parameter(_))));
    }
}
