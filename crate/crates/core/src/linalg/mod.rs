//! Dense complex matrices and the spectral routines built on a single
//! Hermitian Jacobi eigensolver.
//!
//! Storage is row-major. Every operation is a pure function of its inputs.

mod eig;

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::tol;

pub use eig::{herm_eig, herm_eigvals, HermEigResult};

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows {
            write!(f, "  ")?;
            for c in 0..self.cols {
                let z = self[(r, c)];
                write!(f, "{:+.4}{:+.4}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl ComplexMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Shape(format!("empty matrix {rows}x{cols}")));
        }
        if data.len() != rows * cols {
            return Err(Error::Shape(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "matrix dimensions must be positive");
        Self {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut m = Self::zeros(rows, cols);
        for r in 0..rows {
            for c in 0..cols {
                m.data[r * cols + c] = f(r, c);
            }
        }
        m
    }

    pub fn from_real_diag(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = C64::new(d, 0.0);
        }
        m
    }

    /// Builds a matrix from real row slices; handy in tests.
    pub fn from_real_rows(rows: &[&[f64]]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            if row.len() != c {
                return Err(Error::Shape("ragged rows".into()));
            }
            data.extend(row.iter().map(|&x| C64::new(x, 0.0)));
        }
        Self::new(r, c, data)
    }

    /// `|u⟩⟨v|`
    pub fn outer(u: &[C64], v: &[C64]) -> Self {
        Self::from_fn(u.len(), v.len(), |r, c| u[r] * v[c].conj())
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<C64> {
        self.data
    }

    pub fn column(&self, c: usize) -> Vec<C64> {
        (0..self.rows).map(|r| self[(r, c)]).collect()
    }

    pub fn diagonal(&self) -> Vec<C64> {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).collect()
    }

    pub fn dagger(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self[(c, r)].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self[(c, r)])
    }

    pub fn conj(&self) -> Self {
        self.map(|z| z.conj())
    }

    pub fn map(&self, f: impl Fn(C64) -> C64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&z| f(z)).collect(),
        }
    }

    pub fn scale(&self, s: C64) -> Self {
        self.map(|z| z * s)
    }

    pub fn scale_real(&self, s: f64) -> Self {
        self.map(|z| z * s)
    }

    pub fn trace(&self) -> Result<C64> {
        if !self.is_square() {
            return Err(Error::Dimension(format!(
                "trace of non-square {}x{} matrix",
                self.rows, self.cols
            )));
        }
        Ok((0..self.rows).map(|i| self[(i, i)]).sum())
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// `max |H - H†|` entrywise; infinite for non-square input.
    pub fn hermiticity_residual(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let n = self.rows;
        let mut worst = 0.0f64;
        for r in 0..n {
            for c in r..n {
                worst = worst.max((self[(r, c)] - self[(c, r)].conj()).norm());
            }
        }
        worst
    }

    /// `(H + H†) / 2`
    pub fn hermitian_part(&self) -> Self {
        let n = self.rows;
        Self::from_fn(n, n, |r, c| (self[(r, c)] + self[(c, r)].conj()) * 0.5)
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::Dimension(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let (n, k, m) = (self.rows, self.cols, other.cols);
        let mut out = vec![ZERO; n * m];
        for i in 0..n {
            let out_row = &mut out[i * m..(i + 1) * m];
            for p in 0..k {
                let a = self.data[i * k + p];
                if a == ZERO {
                    continue;
                }
                let b_row = &other.data[p * m..(p + 1) * m];
                for (o, b) in out_row.iter_mut().zip(b_row) {
                    *o += a * b;
                }
            }
        }
        Ok(Self {
            rows: n,
            cols: m,
            data: out,
        })
    }

    pub fn mat_vec(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(v.len(), self.cols);
        (0..self.rows)
            .map(|r| {
                self.data[r * self.cols..(r + 1) * self.cols]
                    .iter()
                    .zip(v)
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect()
    }

    /// Kronecker product; entry `(i·rB + k, j·cB + l)` is `A(i,j)·B(k,l)`.
    pub fn kron(&self, other: &Self) -> Self {
        let (rb, cb) = (other.rows, other.cols);
        let rows = self.rows * rb;
        let cols = self.cols * cb;
        let mut data = vec![ZERO; rows * cols];
        for i in 0..self.rows {
            for j in 0..self.cols {
                let a = self[(i, j)];
                if a == ZERO {
                    continue;
                }
                for k in 0..rb {
                    let dst = (i * rb + k) * cols + j * cb;
                    let src = &other.data[k * cb..(k + 1) * cb];
                    for (d, b) in data[dst..dst + cb].iter_mut().zip(src) {
                        *d = a * b;
                    }
                }
            }
        }
        Self { rows, cols, data }
    }

    /// `self^{⊗n}`, with `n ≥ 1`.
    pub fn kron_power(&self, n: usize) -> Self {
        assert!(n >= 1, "tensor power must be at least 1");
        let mut out = self.clone();
        for _ in 1..n {
            out = out.kron(self);
        }
        out
    }

    pub fn submatrix(&self, r0: usize, c0: usize, nr: usize, nc: usize) -> Self {
        assert!(r0 + nr <= self.rows && c0 + nc <= self.cols);
        Self::from_fn(nr, nc, |r, c| self[(r0 + r, c0 + c)])
    }

    pub fn set_submatrix(&mut self, r0: usize, c0: usize, block: &Self) {
        assert!(r0 + block.rows <= self.rows && c0 + block.cols <= self.cols);
        for r in 0..block.rows {
            for c in 0..block.cols {
                self[(r0 + r, c0 + c)] = block[(r, c)];
            }
        }
    }

    /// `max |U†U - I|` entrywise.
    pub fn unitarity_residual(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let prod = self.dagger().matmul(self).expect("square");
        prod.max_abs_diff(&Self::identity(self.rows))
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;

    #[inline]
    fn index(&self, (r, c): (usize, usize)) -> &C64 {
        debug_assert!(r < self.rows && c < self.cols);
        &self.data[r * self.cols + c]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    #[inline]
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut C64 {
        debug_assert!(r < self.rows && c < self.cols);
        &mut self.data[r * self.cols + c]
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "shape mismatch in add");
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "shape mismatch in sub");
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.matmul(rhs).expect("shape mismatch in mul")
    }
}

pub fn dagger(m: &ComplexMatrix) -> ComplexMatrix {
    m.dagger()
}

pub fn mat_trace(m: &ComplexMatrix) -> Result<C64> {
    m.trace()
}

pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a.kron(b)
}

/// Singular values in descending order, `min(rows, cols)` of them.
///
/// Computed as the non-negative half of the spectrum of the Hermitian
/// dilation `[[0, M], [M†, 0]]`, whose eigenvalues are `±σᵢ` (plus zeros).
/// Zero singular values therefore carry absolute error of order
/// `ε‖M‖` instead of the `√(ε)‖M‖` that squaring into `M†M` produces.
pub fn singular_values(m: &ComplexMatrix) -> Vec<f64> {
    let (r, c) = (m.rows(), m.cols());
    let n = r + c;
    let mut dil = ComplexMatrix::zeros(n, n);
    for i in 0..r {
        for j in 0..c {
            let z = m[(i, j)];
            dil[(i, r + j)] = z;
            dil[(r + j, i)] = z.conj();
        }
    }
    let mut ev = herm_eigvals(&dil).expect("dilation is Hermitian by construction");
    ev.reverse();
    ev.truncate(r.min(c));
    ev.into_iter().map(|x| x.max(0.0)).collect()
}

/// `‖M‖₁ = tr √(M†M)`, the sum of singular values.
pub fn trace_norm(m: &ComplexMatrix) -> Result<f64> {
    if !m.is_square() {
        return Err(Error::Dimension(format!(
            "trace norm of non-square {}x{} matrix",
            m.rows(),
            m.cols()
        )));
    }
    Ok(singular_values(m).iter().sum())
}

/// `Σ|λᵢ|` for a Hermitian matrix; agrees with [`trace_norm`] there, at a
/// quarter of the cost.
pub fn hermitian_trace_norm(h: &ComplexMatrix) -> Result<f64> {
    Ok(herm_eigvals(h)?.iter().map(|x| x.abs()).sum())
}

/// Principal square root of a PSD Hermitian matrix. Eigenvalues in
/// `[-PSD_TOL, 0)` are clamped to zero, as are positive ones below the
/// solver's roundoff floor (see [`roundoff_floor`]); the square root would
/// otherwise amplify `1e-17` noise into `1e-9` errors.
pub fn sqrt_psd(h: &ComplexMatrix) -> Result<ComplexMatrix> {
    let eig = herm_eig(h)?;
    let min = eig.eigenvalues.first().copied().unwrap_or(0.0);
    if min < -tol::PSD_TOL {
        return Err(Error::NotPsd(min));
    }
    let floor = roundoff_floor(&eig.eigenvalues);
    let roots: Vec<f64> = eig
        .eigenvalues
        .iter()
        .map(|&x| if x <= floor { 0.0 } else { x.sqrt() })
        .collect();
    Ok(eig.reconstruct_with(&roots))
}

/// `n·ε·max|λ|`: eigenvalues of an `n×n` Hermitian matrix below this are
/// indistinguishable from zero after a Jacobi solve.
pub fn roundoff_floor(eigenvalues: &[f64]) -> f64 {
    let max = eigenvalues.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    eigenvalues.len() as f64 * f64::EPSILON * max
}

/// `exp(iH)` for Hermitian `H`; the result is unitary.
pub fn exp_i_hermitian(h: &ComplexMatrix) -> Result<ComplexMatrix> {
    let eig = herm_eig(h)?;
    let v = &eig.eigenvectors;
    let n = v.rows();
    let phases: Vec<C64> = eig
        .eigenvalues
        .iter()
        .map(|&l| C64::from_polar(1.0, l))
        .collect();
    Ok(ComplexMatrix::from_fn(n, n, |r, c| {
        (0..n).map(|k| v[(r, k)] * phases[k] * v[(c, k)].conj()).sum()
    }))
}

/// Full SVD `M = W·diag(σ)·V†` of a square matrix.
#[derive(Debug, Clone)]
pub struct Svd {
    pub w: ComplexMatrix,
    pub sigma: Vec<f64>,
    pub v: ComplexMatrix,
}

/// One-sided (Hestenes) Jacobi: plane rotations orthogonalize the columns of
/// `M·V` until every pair is orthogonal to `n·ε` relative to the column
/// norms. Small singular values keep their relative accuracy and the
/// normalized columns form a unitary `W`; vanishing columns are completed by
/// Gram–Schmidt.
pub fn svd(m: &ComplexMatrix) -> Result<Svd> {
    if !m.is_square() {
        return Err(Error::Dimension("svd requires a square matrix".into()));
    }
    let n = m.rows();
    let mut a: Vec<Vec<C64>> = (0..n).map(|c| m.column(c)).collect();
    let mut v: Vec<Vec<C64>> = (0..n)
        .map(|c| (0..n).map(|r| if r == c { ONE } else { ZERO }).collect())
        .collect();
    let tol = n as f64 * f64::EPSILON;
    let mut converged = n < 2;
    for _ in 0..tol::JACOBI_MAX_SWEEPS {
        if converged {
            break;
        }
        let mut rotated = false;
        for p in 0..n - 1 {
            for q in p + 1..n {
                let alpha: f64 = a[p].iter().map(|z| z.norm_sqr()).sum();
                let beta: f64 = a[q].iter().map(|z| z.norm_sqr()).sum();
                let gamma: C64 = a[p].iter().zip(&a[q]).map(|(x, y)| x.conj() * y).sum();
                let g = gamma.norm();
                if g == 0.0 || g <= tol * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                // phase e^{-iφ} makes the pair's Gram matrix real
                let phase = gamma.conj() / g;
                let zeta = (beta - alpha) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let sn = c * t;
                for cols in [&mut a, &mut v] {
                    let (left, right) = cols.split_at_mut(q);
                    for (x, y) in left[p].iter_mut().zip(right[0].iter_mut()) {
                        let yp = *y * phase;
                        let new_x = *x * c - yp * sn;
                        *y = *x * sn + yp * c;
                        *x = new_x;
                    }
                }
            }
        }
        converged = !rotated;
    }
    if !converged {
        return Err(Error::NoConvergence(tol::JACOBI_MAX_SWEEPS));
    }

    let norms: Vec<f64> = a.iter().map(|col| norm(col)).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]));
    let scale = m.frobenius_norm();
    let mut w_cols: Vec<Vec<C64>> = Vec::with_capacity(n);
    let mut sigma = Vec::with_capacity(n);
    let mut pending = Vec::new();
    for (k, &j) in order.iter().enumerate() {
        let s = norms[j];
        sigma.push(s);
        if s > f64::EPSILON * f64::EPSILON * scale {
            let mut col = a[j].clone();
            orthogonalize(&mut col, &w_cols);
            let nrm = norm(&col);
            w_cols.push(col.iter().map(|z| z / nrm).collect());
        } else {
            w_cols.push(Vec::new());
            pending.push(k);
        }
    }
    // complete the left basis
    let mut basis_idx = 0;
    for k in pending {
        loop {
            assert!(basis_idx < n, "failed to complete orthonormal basis");
            let mut cand = vec![ZERO; n];
            cand[basis_idx] = ONE;
            basis_idx += 1;
            orthogonalize(&mut cand, &w_cols);
            let nrm = norm(&cand);
            if nrm > 1e-6 {
                w_cols[k] = cand.iter().map(|z| z / nrm).collect();
                break;
            }
        }
    }
    let w = ComplexMatrix::from_fn(n, n, |r, c| w_cols[c][r]);
    let v = ComplexMatrix::from_fn(n, n, |r, c| v[order[c]][r]);
    Ok(Svd { w, sigma, v })
}

/// Two passes of classical Gram–Schmidt against the non-empty columns.
fn orthogonalize(x: &mut [C64], cols: &[Vec<C64>]) {
    for _ in 0..2 {
        for col in cols.iter().filter(|c| !c.is_empty()) {
            let proj: C64 = col.iter().zip(x.iter()).map(|(a, b)| a.conj() * b).sum();
            for (xi, a) in x.iter_mut().zip(col) {
                *xi -= proj * a;
            }
        }
    }
}

pub(crate) fn norm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}
