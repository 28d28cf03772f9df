//! Density matrices carrying labeled tensor factors.
//!
//! Global index convention: factors are enumerated most-significant first,
//! so the row index is `Σ localₖ · strideₖ` with the last factor having
//! stride 1. With factors ordered `A, B, A', B'` the matrix splits into the
//! 4×4 grid of `A'B'` blocks used throughout [`crate::pbit`].

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::{self, herm_eig, herm_eigvals, ComplexMatrix, C64, ZERO};
use crate::tol;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Party {
    Alice,
    Bob,
    /// Holder of a purification; never part of the Alice/Bob cut.
    Eve,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Role {
    Key,
    Shield,
    Purifier,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FactorLabel {
    pub dim: usize,
    pub owner: Party,
    pub role: Role,
}

impl FactorLabel {
    pub fn new(dim: usize, owner: Party, role: Role) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Parameter("factor dimension must be at least 1".into()));
        }
        Ok(Self { dim, owner, role })
    }

    /// A qubit key factor.
    pub const fn key(owner: Party) -> Self {
        Self {
            dim: 2,
            owner,
            role: Role::Key,
        }
    }

    pub const fn shield(dim: usize, owner: Party) -> Self {
        Self {
            dim,
            owner,
            role: Role::Shield,
        }
    }
}

/// `[A key, B key, A' shield, B' shield]`
pub fn abab_factors(shield_a: usize, shield_b: usize) -> Vec<FactorLabel> {
    vec![
        FactorLabel::key(Party::Alice),
        FactorLabel::key(Party::Bob),
        FactorLabel::shield(shield_a, Party::Alice),
        FactorLabel::shield(shield_b, Party::Bob),
    ]
}

pub fn total_dim(factors: &[FactorLabel]) -> usize {
    factors.iter().map(|f| f.dim).product()
}

/// Which tensor factors an operation acts on.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Selector {
    Owner(Party),
    Factors(Vec<usize>),
}

impl Default for Selector {
    /// The PPT cut: every Bob-owned factor.
    fn default() -> Self {
        Selector::Owner(Party::Bob)
    }
}

impl Selector {
    pub fn mask(&self, factors: &[FactorLabel]) -> Result<Vec<bool>> {
        match self {
            Selector::Owner(p) => Ok(factors.iter().map(|f| f.owner == *p).collect()),
            Selector::Factors(idx) => {
                let mut mask = vec![false; factors.len()];
                for &i in idx {
                    if i >= factors.len() {
                        return Err(Error::Selector(format!(
                            "factor {i} out of range ({} factors)",
                            factors.len()
                        )));
                    }
                    mask[i] = true;
                }
                Ok(mask)
            }
        }
    }
}

/// A Hermitian operator with factor labels but no positivity or trace
/// requirement; partial transposes land here.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledOperator {
    pub matrix: ComplexMatrix,
    pub factors: Vec<FactorLabel>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuantumState {
    matrix: ComplexMatrix,
    factors: Vec<FactorLabel>,
}

impl QuantumState {
    /// Validates shape, Hermiticity, unit trace and positivity.
    pub fn new(matrix: ComplexMatrix, factors: Vec<FactorLabel>) -> Result<Self> {
        validate_density(&matrix, &factors)?;
        Ok(Self { matrix, factors })
    }

    /// For maps that provably preserve validity (relabeling, reindexing).
    pub(crate) fn new_trusted(matrix: ComplexMatrix, factors: Vec<FactorLabel>) -> Self {
        debug_assert_eq!(matrix.rows(), total_dim(&factors));
        Self { matrix, factors }
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn factors(&self) -> &[FactorLabel] {
        &self.factors
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn dims(&self) -> Vec<usize> {
        self.factors.iter().map(|f| f.dim).collect()
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    /// Same matrix under a different factorization of its dimension.
    pub fn relabel(&self, factors: Vec<FactorLabel>) -> Result<Self> {
        if total_dim(&factors) != self.dim() {
            return Err(Error::Dimension(format!(
                "factor dims multiply to {}, state has dimension {}",
                total_dim(&factors),
                self.dim()
            )));
        }
        Ok(Self::new_trusted(self.matrix.clone(), factors))
    }

    pub fn purity(&self) -> f64 {
        self.matrix.data().iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn partial_transpose(&self, sel: &Selector) -> Result<LabeledOperator> {
        partial_transpose(self, sel)
    }

    pub fn partial_trace(&self, keep: &Selector) -> Result<QuantumState> {
        partial_trace(self, keep)
    }

    pub fn permute_factors(&self, perm: &[usize]) -> Result<QuantumState> {
        permute_factors(self, perm)
    }
}

fn validate_density(m: &ComplexMatrix, factors: &[FactorLabel]) -> Result<()> {
    if !m.is_square() {
        return Err(Error::Shape(format!("density matrix is {}x{}", m.rows(), m.cols())));
    }
    if factors.is_empty() || factors.iter().any(|f| f.dim == 0) {
        return Err(Error::Shape("factor list empty or has zero dimension".into()));
    }
    if total_dim(factors) != m.rows() {
        return Err(Error::Dimension(format!(
            "factor dims multiply to {}, matrix side is {}",
            total_dim(factors),
            m.rows()
        )));
    }
    if m.data().iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::InvalidState("non-finite entry".into()));
    }
    let herm = m.hermiticity_residual();
    if herm > tol::EIG_TOL {
        return Err(Error::InvalidState(format!("not Hermitian (residual {herm:e})")));
    }
    let tr = m.trace()?;
    if (tr.re - 1.0).abs() > tol::EIG_TOL || tr.im.abs() > tol::EIG_TOL {
        return Err(Error::InvalidState(format!("trace {tr} is not 1")));
    }
    let min = herm_eigvals(m)?[0];
    if min < -psd_tolerance(m.rows()) {
        return Err(Error::NotPsd(min));
    }
    Ok(())
}

/// Admissible negative eigenvalue magnitude at dimension `n`.
pub fn psd_tolerance(n: usize) -> f64 {
    tol::PSD_TOL * n as f64
}

/// Row-major strides, most significant factor first.
fn strides(dims: &[usize]) -> Vec<usize> {
    let mut s = vec![1; dims.len()];
    for k in (0..dims.len().saturating_sub(1)).rev() {
        s[k] = s[k + 1] * dims[k + 1];
    }
    s
}

/// For every global index, the part of `Σ digitₖ·strideₖ` contributed by the
/// masked factors.
fn masked_part(dims: &[usize], mask: &[bool]) -> Vec<usize> {
    let st = strides(dims);
    let n: usize = dims.iter().product();
    (0..n)
        .map(|i| {
            dims.iter()
                .zip(&st)
                .zip(mask)
                .filter(|(_, &m)| m)
                .map(|((&d, &s), _)| (i / s) % d * s)
                .sum()
        })
        .collect()
}

/// Partial transpose of a raw matrix over the masked factors.
pub fn partial_transpose_matrix(m: &ComplexMatrix, dims: &[usize], mask: &[bool]) -> ComplexMatrix {
    let n = m.rows();
    assert_eq!(n, dims.iter().product::<usize>());
    let sel = masked_part(dims, mask);
    let mut out = ComplexMatrix::zeros(n, n);
    for r in 0..n {
        let (rs, ru) = (sel[r], r - sel[r]);
        for c in 0..n {
            let (cs, cu) = (sel[c], c - sel[c]);
            out[(ru + cs, cu + rs)] = m[(r, c)];
        }
    }
    out
}

/// Traces out every factor whose mask entry is `false`.
pub fn partial_trace_matrix(m: &ComplexMatrix, dims: &[usize], keep: &[bool]) -> ComplexMatrix {
    let kept_offsets = offsets(dims, keep);
    let traced_mask: Vec<bool> = keep.iter().map(|k| !k).collect();
    let traced_offsets = offsets(dims, &traced_mask);
    let k = kept_offsets.len();
    ComplexMatrix::from_fn(k, k, |a, b| {
        let (ra, rb) = (kept_offsets[a], kept_offsets[b]);
        traced_offsets.iter().map(|&t| m[(ra + t, rb + t)]).sum()
    })
}

/// Global-index offsets of every multi-index over the masked factors, in
/// the masked factors' own row-major order.
fn offsets(dims: &[usize], mask: &[bool]) -> Vec<usize> {
    let st = strides(dims);
    let mut out = vec![0usize];
    for ((&d, &s), &m) in dims.iter().zip(&st).zip(mask) {
        if !m {
            continue;
        }
        out = out
            .iter()
            .flat_map(|&base| (0..d).map(move |x| base + x * s))
            .collect();
    }
    out
}

/// Reorders tensor factors: new factor `k` is old factor `perm[k]`.
pub fn permute_matrix(m: &ComplexMatrix, dims: &[usize], perm: &[usize]) -> ComplexMatrix {
    let n = m.rows();
    let old_st = strides(dims);
    let new_dims: Vec<usize> = perm.iter().map(|&p| dims[p]).collect();
    let new_st = strides(&new_dims);
    let map: Vec<usize> = (0..n)
        .map(|i| {
            perm.iter()
                .enumerate()
                .map(|(k, &p)| (i / old_st[p]) % dims[p] * new_st[k])
                .sum()
        })
        .collect();
    let mut out = ComplexMatrix::zeros(n, n);
    for r in 0..n {
        for c in 0..n {
            out[(map[r], map[c])] = m[(r, c)];
        }
    }
    out
}

pub fn partial_transpose(s: &QuantumState, sel: &Selector) -> Result<LabeledOperator> {
    let mask = sel.mask(&s.factors)?;
    Ok(LabeledOperator {
        matrix: partial_transpose_matrix(&s.matrix, &s.dims(), &mask),
        factors: s.factors.clone(),
    })
}

pub fn partial_trace(s: &QuantumState, keep: &Selector) -> Result<QuantumState> {
    let mask = keep.mask(&s.factors)?;
    if !mask.iter().any(|&m| m) {
        return Err(Error::Selector("partial trace must keep at least one factor".into()));
    }
    let kept: Vec<FactorLabel> = s
        .factors
        .iter()
        .zip(&mask)
        .filter(|(_, &m)| m)
        .map(|(f, _)| *f)
        .collect();
    let m = partial_trace_matrix(&s.matrix, &s.dims(), &mask);
    Ok(QuantumState::new_trusted(m, kept))
}

pub fn permute_factors(s: &QuantumState, perm: &[usize]) -> Result<QuantumState> {
    let k = s.factors.len();
    let mut seen = vec![false; k];
    if perm.len() != k {
        return Err(Error::Parameter(format!(
            "permutation has {} entries for {k} factors",
            perm.len()
        )));
    }
    for &p in perm {
        if p >= k || seen[p] {
            return Err(Error::Parameter(format!("{perm:?} is not a permutation")));
        }
        seen[p] = true;
    }
    let factors = perm.iter().map(|&p| s.factors[p]).collect();
    Ok(QuantumState::new_trusted(
        permute_matrix(&s.matrix, &s.dims(), perm),
        factors,
    ))
}

/// Regroups factors so all Alice-owned ones precede Bob-owned ones within
/// each role, giving `A keys, B keys, A' shields, B' shields`, then merges
/// each group into a single factor.
pub fn canonicalize(s: &QuantumState) -> Result<QuantumState> {
    let groups = [
        (Party::Alice, Role::Key),
        (Party::Bob, Role::Key),
        (Party::Alice, Role::Shield),
        (Party::Bob, Role::Shield),
    ];
    let mut perm = Vec::new();
    let mut merged = Vec::new();
    for (owner, role) in groups {
        let idx: Vec<usize> = (0..s.factors.len())
            .filter(|&i| s.factors[i].owner == owner && s.factors[i].role == role)
            .collect();
        if idx.is_empty() {
            continue;
        }
        let dim = idx.iter().map(|&i| s.factors[i].dim).product();
        merged.push(FactorLabel { dim, owner, role });
        perm.extend(idx);
    }
    if perm.len() != s.factors.len() {
        return Err(Error::Shape("only Alice/Bob key and shield factors can be canonicalized".into()));
    }
    permute_factors(s, &perm)?.relabel(merged)
}

/// Uhlmann fidelity `tr √(√ρ σ √ρ)`.
///
/// Evaluated as `‖Fρ† Fσ‖₁` with `ρ = Fρ Fρ†` from truncated spectral
/// factors, which avoids square roots of roundoff-level eigenvalues.
pub fn fidelity(rho: &QuantumState, sigma: &QuantumState) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return Err(Error::Dimension(format!(
            "fidelity of {}- and {}-dimensional states",
            rho.dim(),
            sigma.dim()
        )));
    }
    let fr = spectral_factor(rho.matrix())?;
    let fs = spectral_factor(sigma.matrix())?;
    let (Some(fr), Some(fs)) = (fr, fs) else {
        return Ok(0.0);
    };
    let overlap = fr.dagger().matmul(&fs)?;
    let f: f64 = linalg::singular_values(&overlap).iter().sum();
    Ok(f.clamp(0.0, 1.0))
}

/// `V·√Λ` restricted to eigenvalues above the roundoff floor; `None` if the
/// matrix is numerically zero.
fn spectral_factor(m: &ComplexMatrix) -> Result<Option<ComplexMatrix>> {
    let eig = herm_eig(m)?;
    let floor = linalg::roundoff_floor(&eig.eigenvalues);
    let keep: Vec<usize> = (0..m.rows()).filter(|&k| eig.eigenvalues[k] > floor).collect();
    if keep.is_empty() {
        return Ok(None);
    }
    let roots: Vec<f64> = keep.iter().map(|&k| eig.eigenvalues[k].sqrt()).collect();
    Ok(Some(ComplexMatrix::from_fn(m.rows(), keep.len(), |r, c| {
        eig.eigenvectors[(r, keep[c])] * roots[c]
    })))
}

#[derive(Debug, Clone, PartialEq)]
pub struct PtSpectrum {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    pub positive_sum: f64,
    /// Sum of absolute values of the negative eigenvalues.
    pub negative_sum: f64,
}

/// Spectrum of `(|ψ⟩⟨ψ|)^Γ` for `|ψ⟩ = Σ aᵢ|ii⟩`: `{aᵢ²} ∪ {±aᵢaⱼ : i<j}`.
pub fn pure_pt_spectrum(schmidt: &[f64]) -> Result<PtSpectrum> {
    if schmidt.is_empty() || schmidt.iter().any(|&a| a < 0.0 || !a.is_finite()) {
        return Err(Error::Parameter("Schmidt coefficients must be non-negative".into()));
    }
    let norm: f64 = schmidt.iter().map(|a| a * a).sum();
    if (norm - 1.0).abs() > tol::EIG_TOL {
        return Err(Error::Normalization(norm));
    }
    let mut ev: Vec<f64> = schmidt.iter().map(|a| a * a).collect();
    for i in 0..schmidt.len() {
        for j in i + 1..schmidt.len() {
            let x = schmidt[i] * schmidt[j];
            ev.push(x);
            ev.push(-x);
        }
    }
    ev.sort_by(f64::total_cmp);
    let positive_sum = ev.iter().filter(|&&x| x > 0.0).sum();
    let negative_sum = -ev.iter().filter(|&&x| x < 0.0).sum::<f64>();
    Ok(PtSpectrum {
        eigenvalues: ev,
        positive_sum,
        negative_sum,
    })
}

/// Sum of `|λ|` over eigenvalues of the Bob-cut partial transpose below
/// `-psd_tolerance(dim)`; zero exactly when the state passes the PPT test.
pub fn negativity(s: &QuantumState) -> Result<f64> {
    let pt = partial_transpose(s, &Selector::default())?;
    let tol = psd_tolerance(s.dim());
    Ok(herm_eigvals(&pt.matrix)?
        .into_iter()
        .filter(|&x| x < -tol)
        .map(f64::abs)
        .sum())
}

#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    amplitudes: Vec<C64>,
    factors: Vec<FactorLabel>,
}

impl PureState {
    pub fn new(amplitudes: Vec<C64>, factors: Vec<FactorLabel>) -> Result<Self> {
        if amplitudes.len() != total_dim(&factors) {
            return Err(Error::Dimension(format!(
                "{} amplitudes for total dimension {}",
                amplitudes.len(),
                total_dim(&factors)
            )));
        }
        let n2 = linalg::norm(&amplitudes).powi(2);
        if (n2 - 1.0).abs() > 1e-12 {
            return Err(Error::Normalization(n2));
        }
        Ok(Self { amplitudes, factors })
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn factors(&self) -> &[FactorLabel] {
        &self.factors
    }

    pub fn to_density(&self) -> QuantumState {
        QuantumState::new_trusted(
            ComplexMatrix::outer(&self.amplitudes, &self.amplitudes),
            self.factors.clone(),
        )
    }

    /// Reduced state on the kept factors, computed from the amplitudes
    /// without forming the full projector.
    pub fn reduced(&self, keep: &Selector) -> Result<QuantumState> {
        let mask = keep.mask(&self.factors)?;
        let m = reduced_matrix(&self.amplitudes, &self.factors, &mask)?;
        let kept = self
            .factors
            .iter()
            .zip(&mask)
            .filter(|(_, &m)| m)
            .map(|(f, _)| *f)
            .collect();
        QuantumState::new(m, kept)
    }
}

/// `tr_{¬keep} |v⟩⟨v|` for an arbitrary (possibly unnormalized) vector.
pub fn reduced_matrix(v: &[C64], factors: &[FactorLabel], keep: &[bool]) -> Result<ComplexMatrix> {
    if !keep.iter().any(|&k| k) {
        return Err(Error::Selector("must keep at least one factor".into()));
    }
    let dims: Vec<usize> = factors.iter().map(|f| f.dim).collect();
    let kept = offsets(&dims, keep);
    let traced_mask: Vec<bool> = keep.iter().map(|k| !k).collect();
    let traced = offsets(&dims, &traced_mask);
    let k = kept.len();
    Ok(ComplexMatrix::from_fn(k, k, |a, b| {
        traced
            .iter()
            .map(|&t| v[kept[a] + t] * v[kept[b] + t].conj())
            .sum()
    }))
}

/// Purification with an Eve factor (last) whose dimension is the number of
/// eigenvalues of `rho` at or above the purification cutoff.
pub fn purify(rho: &QuantumState) -> Result<PureState> {
    let eig = herm_eig(rho.matrix())?;
    let keep: Vec<usize> = (0..rho.dim())
        .filter(|&k| eig.eigenvalues[k] >= tol::PURIFY_CUTOFF)
        .collect();
    let r = keep.len().max(1);
    let n = rho.dim();
    let mut amps = vec![ZERO; n * r];
    for (e, &k) in keep.iter().enumerate() {
        let w = eig.eigenvalues[k].sqrt();
        for x in 0..n {
            amps[x * r + e] = eig.eigenvectors[(x, k)] * w;
        }
    }
    // truncation moves the norm by at most rank·cutoff
    let nrm = linalg::norm(&amps);
    amps.iter_mut().for_each(|z| *z /= nrm);
    let mut factors = rho.factors().to_vec();
    factors.push(FactorLabel {
        dim: r,
        owner: Party::Eve,
        role: Role::Purifier,
    });
    PureState::new(amps, factors)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BellKind {
    PhiPlus,
    PhiMinus,
    PsiPlus,
    PsiMinus,
}

pub fn bell_vector(kind: BellKind) -> [C64; 4] {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let (a, b) = (C64::new(h, 0.0), C64::new(-h, 0.0));
    match kind {
        BellKind::PhiPlus => [a, ZERO, ZERO, a],
        BellKind::PhiMinus => [a, ZERO, ZERO, b],
        BellKind::PsiPlus => [ZERO, a, a, ZERO],
        BellKind::PsiMinus => [ZERO, a, b, ZERO],
    }
}

/// Two-qubit Bell state on Alice/Bob key factors.
pub fn bell_state(kind: BellKind) -> PureState {
    PureState {
        amplitudes: bell_vector(kind).to_vec(),
        factors: vec![FactorLabel::key(Party::Alice), FactorLabel::key(Party::Bob)],
    }
}

/// The swap operator on `C^d ⊗ C^d`.
pub fn swap_operator(d: usize) -> ComplexMatrix {
    let mut s = ComplexMatrix::zeros(d * d, d * d);
    for i in 0..d {
        for j in 0..d {
            s[(i * d + j, j * d + i)] = linalg::ONE;
        }
    }
    s
}

fn check_local_dim(d: usize) -> Result<()> {
    if d < 2 {
        return Err(Error::Dimension(format!("local dimension {d} < 2")));
    }
    Ok(())
}

pub fn sym_proj(d: usize) -> Result<ComplexMatrix> {
    check_local_dim(d)?;
    Ok((&ComplexMatrix::identity(d * d) + &swap_operator(d)).scale_real(0.5))
}

pub fn antisym_proj(d: usize) -> Result<ComplexMatrix> {
    check_local_dim(d)?;
    Ok((&ComplexMatrix::identity(d * d) - &swap_operator(d)).scale_real(0.5))
}

fn werner_factors(d: usize) -> Vec<FactorLabel> {
    vec![FactorLabel::shield(d, Party::Alice), FactorLabel::shield(d, Party::Bob)]
}

/// `2 P_sym / (d² + d)`
pub fn werner_sym(d: usize) -> Result<QuantumState> {
    let m = sym_proj(d)?.scale_real(2.0 / (d * d + d) as f64);
    QuantumState::new(m, werner_factors(d))
}

/// `2 P_as / (d² − d)`
pub fn werner_antisym(d: usize) -> Result<QuantumState> {
    let m = antisym_proj(d)?.scale_real(2.0 / (d * d - d) as f64);
    QuantumState::new(m, werner_factors(d))
}

/// ChaCha8 stream seeded through `SeedableRng::seed_from_u64` (PCG32
/// expansion of the 64-bit seed). All randomness in the crate flows from
/// generators built here.
pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Entries i.i.d. `(N(0,1) + i·N(0,1)) / √2`.
pub fn ginibre<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> ComplexMatrix {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    ComplexMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        C64::new(re * h, im * h)
    })
}

pub fn random_unit_vector<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Vec<C64> {
    let g = ginibre(d, 1, rng).into_data();
    let n = linalg::norm(&g);
    g.into_iter().map(|z| z / n).collect()
}

pub fn haar_unitary(d: usize, seed: u64) -> Result<ComplexMatrix> {
    haar_unitary_with(d, &mut rng_from_seed(seed))
}

/// Haar-random unitary: QR of a Ginibre matrix with `R` having a positive
/// diagonal (twice-iterated Gram–Schmidt).
pub fn haar_unitary_with<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Result<ComplexMatrix> {
    if d == 0 {
        return Err(Error::Parameter("unitary dimension must be at least 1".into()));
    }
    let g = ginibre(d, d, rng);
    let mut cols: Vec<Vec<C64>> = Vec::with_capacity(d);
    for j in 0..d {
        let mut v = g.column(j);
        for _ in 0..2 {
            for q in &cols {
                let proj: C64 = q.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
                for (x, a) in v.iter_mut().zip(q) {
                    *x -= proj * a;
                }
            }
        }
        let n = linalg::norm(&v);
        cols.push(v.into_iter().map(|z| z / n).collect());
    }
    Ok(ComplexMatrix::from_fn(d, d, |r, c| cols[c][r]))
}

pub fn random_density(d: usize, rank: usize, seed: u64) -> Result<QuantumState> {
    random_density_with(d, rank, &mut rng_from_seed(seed))
}

/// `G G† / tr(G G†)` for a `d × rank` Ginibre matrix `G`, labeled as a
/// single Alice shield factor; use [`QuantumState::relabel`] to split it.
pub fn random_density_with<R: Rng + ?Sized>(d: usize, rank: usize, rng: &mut R) -> Result<QuantumState> {
    if rank == 0 || rank > d {
        return Err(Error::Parameter(format!("rank {rank} outside 1..={d}")));
    }
    let m = random_density_matrix(d, rank, rng);
    QuantumState::new(m, vec![FactorLabel::shield(d, Party::Alice)])
}

pub(crate) fn random_density_matrix<R: Rng + ?Sized>(d: usize, rank: usize, rng: &mut R) -> ComplexMatrix {
    let g = ginibre(d, rank, rng);
    let m = g.matmul(&g.dagger()).expect("shapes agree").hermitian_part();
    let tr = m.trace().expect("square").re;
    m.scale_real(1.0 / tr)
}
