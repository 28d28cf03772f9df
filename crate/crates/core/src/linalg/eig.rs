//! Cyclic Jacobi eigensolver for dense Hermitian matrices.
//!
//! Before rotating, the sparsity graph of the input (exact non-zeros) is
//! split into connected components and each component is diagonalized on
//! its own. The block-structured states in this crate decompose into many
//! small components, which keeps the O(n³) sweeps cheap.

use super::{ComplexMatrix, C64, ZERO};
use crate::error::{Error, Result};
use crate::tol;

#[derive(Debug, Clone)]
pub struct HermEigResult {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// Column `k` pairs with `eigenvalues[k]`.
    pub eigenvectors: ComplexMatrix,
}

impl HermEigResult {
    /// `V·diag(λ)·V†`
    pub fn reconstruct(&self) -> ComplexMatrix {
        self.reconstruct_with(&self.eigenvalues)
    }

    /// `V·diag(f)·V†` for replacement spectral values `f`.
    pub fn reconstruct_with(&self, values: &[f64]) -> ComplexMatrix {
        let v = &self.eigenvectors;
        let n = v.rows();
        assert_eq!(values.len(), n);
        let mut out = ComplexMatrix::zeros(n, n);
        for (k, &lam) in values.iter().enumerate() {
            if lam == 0.0 {
                continue;
            }
            for r in 0..n {
                let a = v[(r, k)] * lam;
                if a == ZERO {
                    continue;
                }
                for c in 0..n {
                    out[(r, c)] += a * v[(c, k)].conj();
                }
            }
        }
        out
    }
}

/// Nonzero entries as (row, value).
type SparseVec = Vec<(usize, C64)>;

pub fn herm_eig(h: &ComplexMatrix) -> Result<HermEigResult> {
    let (values, vectors) = solve(h, true)?;
    Ok(HermEigResult {
        eigenvalues: values,
        eigenvectors: vectors.expect("vectors requested"),
    })
}

/// Eigenvalues only, ascending.
pub fn herm_eigvals(h: &ComplexMatrix) -> Result<Vec<f64>> {
    Ok(solve(h, false)?.0)
}

fn solve(h: &ComplexMatrix, want_vectors: bool) -> Result<(Vec<f64>, Option<ComplexMatrix>)> {
    if !h.is_square() {
        return Err(Error::Dimension(format!(
            "eigensolver needs a square matrix, got {}x{}",
            h.rows(),
            h.cols()
        )));
    }
    let residual = h.hermiticity_residual();
    if residual > tol::EIG_TOL * h.max_abs().max(1.0) {
        return Err(Error::Shape(format!(
            "matrix is not Hermitian (residual {residual:e})"
        )));
    }
    let n = h.rows();
    let a = h.hermitian_part();

    // (value, origin index, eigenvector restricted to its component)
    let mut pairs: Vec<(f64, usize, SparseVec)> = Vec::with_capacity(n);
    for comp in components(&a) {
        let k = comp.len();
        let mut sub: Vec<C64> = Vec::with_capacity(k * k);
        for &r in &comp {
            for &c in &comp {
                sub.push(a[(r, c)]);
            }
        }
        let mut vecs = if want_vectors {
            let mut v = vec![ZERO; k * k];
            for i in 0..k {
                v[i * k + i] = super::ONE;
            }
            Some(v)
        } else {
            None
        };
        jacobi(&mut sub, k, vecs.as_deref_mut())?;
        for j in 0..k {
            let vec = match &vecs {
                Some(v) => (0..k).map(|i| (comp[i], v[i * k + j])).collect(),
                None => Vec::new(),
            };
            pairs.push((sub[j * k + j].re, comp[j], vec));
        }
    }

    pairs.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
    let values = pairs.iter().map(|p| p.0).collect();
    let vectors = want_vectors.then(|| {
        let mut v = ComplexMatrix::zeros(n, n);
        for (col, (_, _, entries)) in pairs.iter().enumerate() {
            for &(row, z) in entries {
                v[(row, col)] = z;
            }
        }
        v
    });
    Ok((values, vectors))
}

/// Connected components of the non-zero pattern, each sorted ascending,
/// ordered by their smallest index.
fn components(a: &ComplexMatrix) -> Vec<Vec<usize>> {
    let n = a.rows();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for r in 0..n {
        for c in r + 1..n {
            if a[(r, c)] != ZERO {
                let (pr, pc) = (find(&mut parent, r), find(&mut parent, c));
                if pr != pc {
                    parent[pr.max(pc)] = pr.min(pc);
                }
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut slot = vec![usize::MAX; n];
    for i in 0..n {
        let root = find(&mut parent, i);
        if slot[root] == usize::MAX {
            slot[root] = groups.len();
            groups.push(Vec::new());
        }
        groups[slot[root]].push(i);
    }
    groups
}

/// In-place cyclic Jacobi on a dense row-major Hermitian `n×n` block.
/// On return the diagonal holds the eigenvalues and `v` (if given) the
/// accumulated rotations.
fn jacobi(a: &mut [C64], n: usize, mut v: Option<&mut [C64]>) -> Result<()> {
    if n == 1 {
        a[0] = C64::new(a[0].re, 0.0);
        return Ok(());
    }
    let norm_f = a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let threshold = tol::JACOBI_OFF_TOL * norm_f;
    for i in 0..n {
        a[i * n + i].im = 0.0;
    }

    for sweep in 0..tol::JACOBI_MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|r| (0..n).filter(move |&c| c != r).map(move |c| (r, c)))
            .map(|(r, c)| a[r * n + c].norm_sqr())
            .sum::<f64>()
            .sqrt();
        if off <= threshold {
            return Ok(());
        }
        for p in 0..n - 1 {
            for q in p + 1..n {
                let g = a[p * n + q];
                let ag = g.norm();
                if ag == 0.0 {
                    continue;
                }
                let app = a[p * n + p].re;
                let aqq = a[q * n + q].re;
                // negligible against both diagonals: drop it
                if sweep > 3 && app.abs() + 100.0 * ag == app.abs() && aqq.abs() + 100.0 * ag == aqq.abs() {
                    a[p * n + q] = ZERO;
                    a[q * n + p] = ZERO;
                    continue;
                }
                let e = g / ag;
                let tau = (aqq - app) / (2.0 * ag);
                let t = if tau.abs() > 1e150 {
                    0.5 / tau
                } else {
                    let sgn = if tau >= 0.0 { 1.0 } else { -1.0 };
                    sgn / (tau.abs() + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                let se = e * s;
                let se_conj = se.conj();

                // A ← A·R with R = [[c, s·e], [-s·ē, c]] on columns p, q
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = akp * c - akq * se_conj;
                    a[k * n + q] = akp * se + akq * c;
                }
                // A ← R†·A on rows p, q
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = apk * c - aqk * se;
                    a[q * n + k] = apk * se_conj + aqk * c;
                }
                a[p * n + p] = C64::new(app - t * ag, 0.0);
                a[q * n + q] = C64::new(aqq + t * ag, 0.0);
                a[p * n + q] = ZERO;
                a[q * n + p] = ZERO;

                if let Some(v) = v.as_deref_mut() {
                    for k in 0..n {
                        let vkp = v[k * n + p];
                        let vkq = v[k * n + q];
                        v[k * n + p] = vkp * c - vkq * se_conj;
                        v[k * n + q] = vkp * se + vkq * c;
                    }
                }
            }
        }
    }
    Err(Error::NoConvergence(tol::JACOBI_MAX_SWEEPS))
}
