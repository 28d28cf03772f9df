//! Known PPT families with positive distillable key, each returned in the
//! canonical `[A, B, A', B']` factor shape.

use std::f64::consts::SQRT_2;

use crate::error::{Error, Result};
use crate::linalg::{self, ComplexMatrix, C64, ONE, ZERO};
use crate::qstate::{self, canonicalize, FactorLabel, Party, QuantumState};
use crate::tol;

/// `(2 − √2)/8`, the open upper end of the CCKKL weight window.
pub const CCKKL_WEIGHT_MAX: f64 = (2.0 - SQRT_2) / 8.0;

const UNITARY_TOL: f64 = 1e-10;

fn check_cap(dim: Option<usize>, cap: usize) -> Result<usize> {
    match dim {
        Some(d) if d <= cap => Ok(d),
        Some(d) => Err(Error::SizeCap { dim: d, cap }),
        None => Err(Error::SizeCap { dim: usize::MAX, cap }),
    }
}

/// `[[C,0,0,D],[0,E,F,0],[0,F†,G,0],[D†,0,0,H]]`, each block `n×n`.
fn key_block_matrix(
    c: &ComplexMatrix,
    d: &ComplexMatrix,
    e: &ComplexMatrix,
    f: &ComplexMatrix,
    g: &ComplexMatrix,
    h: &ComplexMatrix,
) -> ComplexMatrix {
    let n = c.rows();
    let mut m = ComplexMatrix::zeros(4 * n, 4 * n);
    m.set_submatrix(0, 0, c);
    m.set_submatrix(0, 3 * n, d);
    m.set_submatrix(3 * n, 0, &d.dagger());
    m.set_submatrix(n, n, e);
    m.set_submatrix(n, 2 * n, f);
    m.set_submatrix(2 * n, n, &f.dagger());
    m.set_submatrix(2 * n, 2 * n, g);
    m.set_submatrix(3 * n, 3 * n, h);
    m
}

/// Keys followed by `pairs` interleaved `(A'_k, B'_k)` shield factors.
fn interleaved_factors(d: usize, pairs: usize) -> Vec<FactorLabel> {
    let mut f = vec![FactorLabel::key(Party::Alice), FactorLabel::key(Party::Bob)];
    for _ in 0..pairs {
        f.push(FactorLabel::shield(d, Party::Alice));
        f.push(FactorLabel::shield(d, Party::Bob));
    }
    f
}

fn power(m: &ComplexMatrix, n: usize) -> ComplexMatrix {
    m.kron_power(n)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HhhoParams {
    pub d: usize,
    pub l: usize,
    pub m: usize,
    pub p: f64,
}

impl HhhoParams {
    pub fn new(d: usize, l: usize, m: usize, p: f64) -> Result<Self> {
        if d < 2 {
            return Err(Error::Parameter(format!("local dimension d = {d} < 2")));
        }
        if l < 1 || m < 1 {
            return Err(Error::Parameter("tensor powers l and m must be at least 1".into()));
        }
        if !(0.0..0.5).contains(&p) {
            return Err(Error::Parameter(format!("mixing weight p = {p} outside [0, 1/2)")));
        }
        Ok(Self { d, l, m, p })
    }

    /// `N = 2(2p)^m + 2(1−2p)^m`
    pub fn normalization(&self) -> f64 {
        let m = self.m as i32;
        2.0 * (2.0 * self.p).powi(m) + 2.0 * (1.0 - 2.0 * self.p).powi(m)
    }

    /// `4·d^(2lm)`, `None` on overflow.
    pub fn total_dim(&self) -> Option<usize> {
        let e = u32::try_from(2 * self.l.checked_mul(self.m)?).ok()?;
        self.d.checked_pow(e)?.checked_mul(4)
    }
}

pub fn hhho_state(params: &HhhoParams, dim_cap: usize) -> Result<QuantumState> {
    check_cap(params.total_dim(), dim_cap)?;
    let HhhoParams { d, l, m, p } = *params;
    let rs = qstate::werner_sym(d)?.into_matrix();
    let ra = qstate::werner_antisym(d)?.into_matrix();
    let tau0 = power(&rs, l);
    let tau1 = power(&(&ra + &rs).scale_real(0.5), l);
    let c = power(&(&tau1 + &tau0).scale_real(p), m);
    let off = power(&(&tau1 - &tau0).scale_real(p), m);
    let e = power(&tau0.scale_real(1.0 - 2.0 * p), m);
    let z = ComplexMatrix::zeros(c.rows(), c.rows());
    let raw = key_block_matrix(&c, &off, &e, &z, &e, &c).scale_real(1.0 / params.normalization());
    let s = QuantumState::new(raw, interleaved_factors(d, l * m))?;
    canonicalize(&s)
}

fn cckkl_p(weight_sum: f64) -> f64 {
    (1.0 - 2.0 * weight_sum) / (4.0 + 2.0 * SQRT_2)
}

fn ket2(i: usize, j: usize) -> [C64; 4] {
    let mut v = [ZERO; 4];
    v[2 * i + j] = ONE;
    v
}

fn proj(v: &[C64]) -> ComplexMatrix {
    ComplexMatrix::outer(v, v)
}

/// `σ₀ = p(|φ⁺⟩⟨φ⁺| + |01⟩⟨01|)`, `σ₁ = p(|φ⁻⟩⟨φ⁻| + |10⟩⟨10|)`.
fn cckkl_sigma01(p: f64) -> (ComplexMatrix, ComplexMatrix) {
    let phip = qstate::bell_vector(qstate::BellKind::PhiPlus);
    let phim = qstate::bell_vector(qstate::BellKind::PhiMinus);
    let s0 = (&proj(&phip) + &proj(&ket2(0, 1))).scale_real(p);
    let s1 = (&proj(&phim) + &proj(&ket2(1, 0))).scale_real(p);
    (s0, s1)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CckklParams {
    pub q: f64,
    /// Present for class A only.
    pub r: Option<f64>,
    pub p: f64,
}

impl CckklParams {
    pub fn class_a(q: f64, r: f64) -> Result<Self> {
        if !(q > 0.0 && r > 0.0 && q + r < CCKKL_WEIGHT_MAX) {
            return Err(Error::Parameter(format!(
                "need q > 0, r > 0, q + r < (2-√2)/8; got q = {q}, r = {r}"
            )));
        }
        Ok(Self {
            q,
            r: Some(r),
            p: cckkl_p(q + r),
        })
    }

    pub fn class_b(q: f64) -> Result<Self> {
        if !(q > 0.0 && q < CCKKL_WEIGHT_MAX) {
            return Err(Error::Parameter(format!("need 0 < q < (2-√2)/8; got q = {q}")));
        }
        Ok(Self {
            q,
            r: None,
            p: cckkl_p(q),
        })
    }

    /// `σ₀, σ₁, σ₂` of class A.
    fn class_a_sigmas(&self) -> (ComplexMatrix, ComplexMatrix, ComplexMatrix) {
        let p = self.p;
        let r = self.r.unwrap_or(0.0);
        let (s0, s1) = cckkl_sigma01(p);
        let s2 = ComplexMatrix::from_real_diag(&[self.q, p / SQRT_2, p / SQRT_2, r]);
        (s0, s1, s2)
    }
}

pub fn cckkl_a_state(q: f64, r: f64) -> Result<QuantumState> {
    let params = CckklParams::class_a(q, r)?;
    let (s0, s1, s2) = params.class_a_sigmas();
    let c = &s0 + &s1;
    let d = &s0 - &s1;
    let e = s2.scale_real(2.0);
    let z = ComplexMatrix::zeros(4, 4);
    let m = key_block_matrix(&c, &d, &e, &z, &e, &c).scale_real(0.5);
    QuantumState::new(m, qstate::abab_factors(2, 2))
}

/// The literal normalization `2^(n+1)[(2p)^n + (√2p + 2q + 2r)^n]` next to
/// the trace of the unnormalized block matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerNormalization {
    pub literal: f64,
    pub actual: f64,
}

impl PowerNormalization {
    pub fn relative_gap(&self) -> f64 {
        (self.literal - self.actual).abs() / self.actual
    }
}

pub fn cckkl_a_power_normalization(q: f64, r: f64, n: usize) -> Result<PowerNormalization> {
    let params = CckklParams::class_a(q, r)?;
    let p = params.p;
    let ni = n as i32;
    let literal = 2f64.powi(ni + 1) * ((2.0 * p).powi(ni) + (SQRT_2 * p + 2.0 * q + 2.0 * r).powi(ni));
    // tr(σ₀+σ₁) = 4p, tr(2σ₂) = 2√2p + 2q + 2r
    let actual = 2.0 * (4.0 * p).powi(ni) + 2.0 * (2.0 * SQRT_2 * p + 2.0 * q + 2.0 * r).powi(ni);
    Ok(PowerNormalization { literal, actual })
}

/// The `n`-copy block state with `(σ₀±σ₁)^⊗n` corners and `(2σ₂)^⊗n`
/// centers, scaled to unit trace. Shield factors `(2^n, 2^n)`.
pub fn cckkl_a_power(q: f64, r: f64, n: usize, dim_cap: usize) -> Result<QuantumState> {
    if n < 1 {
        return Err(Error::Parameter("number of copies must be at least 1".into()));
    }
    let params = CckklParams::class_a(q, r)?;
    let total = u32::try_from(n).ok().and_then(|e| 4usize.checked_pow(e)).and_then(|x| x.checked_mul(4));
    check_cap(total, dim_cap)?;
    let (s0, s1, s2) = params.class_a_sigmas();
    let c = power(&(&s0 + &s1), n);
    let d = power(&(&s0 - &s1), n);
    let e = power(&s2.scale_real(2.0), n);
    let z = ComplexMatrix::zeros(c.rows(), c.rows());
    let raw = key_block_matrix(&c, &d, &e, &z, &e, &c);
    let norm = cckkl_a_power_normalization(q, r, n)?.actual;
    let s = QuantumState::new(raw.scale_real(1.0 / norm), interleaved_factors(2, n))?;
    canonicalize(&s)
}

/// `(|01⟩ + |10⟩)/√2, (|01⟩ − |10⟩)/√2`
pub fn default_x_basis() -> ([C64; 4], [C64; 4]) {
    let a = qstate::bell_vector(qstate::BellKind::PsiPlus);
    let b = qstate::bell_vector(qstate::BellKind::PsiMinus);
    (a, b)
}

pub fn cckkl_b_state(q: f64, x_basis: Option<([C64; 4], [C64; 4])>) -> Result<QuantumState> {
    let params = CckklParams::class_b(q)?;
    let (x0, x1) = x_basis.unwrap_or_else(default_x_basis);
    let inner = |u: &[C64], v: &[C64]| -> C64 { u.iter().zip(v).map(|(a, b)| a.conj() * b).sum() };
    let ortho = (inner(&x0, &x0) - ONE).norm() <= 1e-10
        && (inner(&x1, &x1) - ONE).norm() <= 1e-10
        && inner(&x0, &x1).norm() <= 1e-10;
    let span = &proj(&x0) + &proj(&x1);
    let target = &proj(&ket2(0, 1)) + &proj(&ket2(1, 0));
    if !ortho || span.max_abs_diff(&target) > 1e-10 {
        return Err(Error::Parameter(
            "x basis must be orthonormal and span {|01>, |10>}".into(),
        ));
    }
    let p = params.p;
    let (s0, s1) = cckkl_sigma01(p);
    let q00 = proj(&ket2(0, 0)).scale_real(q);
    let s2 = &proj(&x0).scale_real(SQRT_2 * p) + &q00;
    let s3 = &proj(&x1).scale_real(SQRT_2 * p) + &q00;
    let mut m = ComplexMatrix::zeros(16, 16);
    for (kind, sigma) in [
        (qstate::BellKind::PhiPlus, &s0),
        (qstate::BellKind::PhiMinus, &s1),
        (qstate::BellKind::PsiPlus, &s2),
        (qstate::BellKind::PsiMinus, &s3),
    ] {
        m = &m + &proj(&qstate::bell_vector(kind)).kron(sigma);
    }
    QuantumState::new(m, qstate::abab_factors(2, 2))
}

fn check_unitary(u: &ComplexMatrix) -> Result<()> {
    if !u.is_square() {
        return Err(Error::Parameter(format!("unitary must be square, got {}x{}", u.rows(), u.cols())));
    }
    let res = u.unitarity_residual();
    if res > UNITARY_TOL {
        return Err(Error::Parameter(format!("matrix not unitary (residual {res:e})")));
    }
    Ok(())
}

/// `W_U = Σ u_ij |ij⟩⟨ji|` on `C^d ⊗ C^d`.
pub fn w_u(u: &ComplexMatrix) -> Result<ComplexMatrix> {
    check_unitary(u)?;
    let d = u.rows();
    let mut w = ComplexMatrix::zeros(d * d, d * d);
    for i in 0..d {
        for j in 0..d {
            w[(i * d + j, j * d + i)] = u[(i, j)];
        }
    }
    Ok(w)
}

#[derive(Debug, Clone, PartialEq)]
pub struct HphhParams {
    unitary: ComplexMatrix,
    /// `Σ|u_ij| = ‖W_U‖₁`
    pub w_norm: f64,
    /// `‖W_U‖ / (‖W_U‖ + d)`
    pub p: f64,
}

impl HphhParams {
    pub fn new(unitary: ComplexMatrix) -> Result<Self> {
        check_unitary(&unitary)?;
        let d = unitary.rows() as f64;
        let w_norm: f64 = unitary.data().iter().map(|z| z.norm()).sum();
        Ok(Self {
            unitary,
            w_norm,
            p: w_norm / (w_norm + d),
        })
    }

    pub fn unitary(&self) -> &ComplexMatrix {
        &self.unitary
    }

    pub fn d(&self) -> usize {
        self.unitary.rows()
    }

    /// `½ − d / (2(Σ|u_ij| + d))`
    pub fn a0011_closed_form(&self) -> f64 {
        let d = self.d() as f64;
        0.5 - d / (2.0 * (self.w_norm + d))
    }
}

/// `X₁ = W_U/‖W_U‖`, `X₂ = W_U^Γ/‖W_U^Γ‖` with `‖W_U^Γ‖ = d`.
pub fn hphh_operators(params: &HphhParams) -> Result<(ComplexMatrix, ComplexMatrix)> {
    let d = params.d();
    let w = w_u(&params.unitary)?;
    let wg = qstate::partial_transpose_matrix(&w, &[d, d], &[false, true]);
    Ok((w.scale_real(1.0 / params.w_norm), wg.scale_real(1.0 / d as f64)))
}

pub fn hphh_from_unitary(u: &ComplexMatrix, dim_cap: usize) -> Result<QuantumState> {
    let params = HphhParams::new(u.clone())?;
    let d = params.d();
    check_cap(d.checked_mul(d).and_then(|x| x.checked_mul(4)), dim_cap)?;
    let (x1, x2) = hphh_operators(&params)?;
    hphh_general(&x1, &x2, params.p, (d, d))
}

/// The two-parameter-operator block state; PSD is checked, not assumed.
pub fn hphh_general(
    x1: &ComplexMatrix,
    x2: &ComplexMatrix,
    p: f64,
    shield_dims: (usize, usize),
) -> Result<QuantumState> {
    let n = shield_dims.0 * shield_dims.1;
    for (name, x) in [("X1", x1), ("X2", x2)] {
        if x.rows() != n || x.cols() != n {
            return Err(Error::Parameter(format!(
                "{name} is {}x{}, shield dimension is {n}",
                x.rows(),
                x.cols()
            )));
        }
        let tn = linalg::trace_norm(x)?;
        if (tn - 1.0).abs() > 1e-9 {
            return Err(Error::Parameter(format!("{name} has trace norm {tn}, expected 1")));
        }
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Parameter(format!("p = {p} outside [0, 1]")));
    }
    let abs_left = |x: &ComplexMatrix| linalg::sqrt_psd(&x.matmul(&x.dagger())?.hermitian_part());
    let abs_right = |x: &ComplexMatrix| linalg::sqrt_psd(&x.dagger().matmul(x)?.hermitian_part());
    let q = 1.0 - p;
    let m = key_block_matrix(
        &abs_left(x1)?.scale_real(p),
        &x1.scale_real(p),
        &abs_left(x2)?.scale_real(q),
        &x2.scale_real(q),
        &abs_right(x2)?.scale_real(q),
        &abs_right(x1)?.scale_real(p),
    )
    .scale_real(0.5);
    let min = linalg::herm_eigvals(&m)?[0];
    if min < -qstate::psd_tolerance(m.rows()) {
        return Err(Error::Construction(format!(
            "block matrix is not PSD (min eigenvalue {min:e})"
        )));
    }
    QuantumState::new(m, qstate::abab_factors(shield_dims.0, shield_dims.1))
}

pub fn binary_entropy(p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Parameter(format!("probability {p} outside [0, 1]")));
    }
    let term = |x: f64| if x <= 0.0 { 0.0 } else { -x * x.log2() };
    Ok(term(p) + term(1.0 - p))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KeyRateBound {
    /// `1 − h(p)`
    pub raw: f64,
    pub clamped: f64,
}

pub fn hphh_key_rate_lower(params: &HphhParams) -> Result<KeyRateBound> {
    let raw = 1.0 - binary_entropy(params.p)?;
    Ok(KeyRateBound {
        raw,
        clamped: raw.max(0.0),
    })
}

/// `ω^(jk)/√d` with `ω = e^(2πi/d)`.
pub fn fourier_unitary(d: usize) -> Result<ComplexMatrix> {
    if d < 2 {
        return Err(Error::Parameter(format!("Fourier dimension {d} < 2")));
    }
    let s = 1.0 / (d as f64).sqrt();
    Ok(ComplexMatrix::from_fn(d, d, |j, k| {
        let phase = 2.0 * std::f64::consts::PI * ((j * k) % d) as f64 / d as f64;
        C64::from_polar(s, phase)
    }))
}

pub const DEFAULT_DIM_CAP: usize = tol::DEFAULT_DIM_CAP;
