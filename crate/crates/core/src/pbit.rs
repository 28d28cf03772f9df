//! Private states, the `A_ijkl` block decomposition and the key-correlation
//! identity `‖A₀₀₁₁‖ = √(p₀₀p₁₁)·F(ρ₀₀ᴱ, ρ₁₁ᴱ)`.
//!
//! Block index `a = 2i + j` for key outcome `|ij⟩`; block `(a, b)` is the
//! `D×D` operator on the shield `A'B'` with `D = d_A'·d_B'`.

use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{trace_norm, ComplexMatrix};
use crate::qstate::{
    self, fidelity, purify, FactorLabel, Party, QuantumState, Role,
};
use crate::tol;

const UNITARY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct PbitParams {
    u00: ComplexMatrix,
    u11: ComplexMatrix,
    shield: QuantumState,
}

impl PbitParams {
    /// `shield` must be a state on `A'B'`; both unitaries act on its space.
    pub fn new(u00: ComplexMatrix, u11: ComplexMatrix, shield: QuantumState) -> Result<Self> {
        let d = shield.dim();
        for (name, u) in [("U00", &u00), ("U11", &u11)] {
            if u.rows() != d || u.cols() != d {
                return Err(Error::Parameter(format!(
                    "{name} is {}x{}, shield has dimension {d}",
                    u.rows(),
                    u.cols()
                )));
            }
            let res = u.unitarity_residual();
            if res > UNITARY_TOL {
                return Err(Error::Parameter(format!("{name} not unitary (residual {res:e})")));
            }
        }
        if shield.factors().iter().any(|f| f.owner == Party::Eve) {
            return Err(Error::Parameter("shield cannot carry an Eve factor".into()));
        }
        Ok(Self { u00, u11, shield })
    }

    /// Haar unitaries and a full-rank random shield on `C^dA ⊗ C^dB`.
    pub fn random<R: Rng + ?Sized>(d_a: usize, d_b: usize, rng: &mut R) -> Result<Self> {
        let d = d_a * d_b;
        let u00 = qstate::haar_unitary_with(d, rng)?;
        let u11 = qstate::haar_unitary_with(d, rng)?;
        let shield = qstate::random_density_with(d, d, rng)?.relabel(vec![
            FactorLabel::shield(d_a, Party::Alice),
            FactorLabel::shield(d_b, Party::Bob),
        ])?;
        Self::new(u00, u11, shield)
    }

    pub fn u00(&self) -> &ComplexMatrix {
        &self.u00
    }

    pub fn u11(&self) -> &ComplexMatrix {
        &self.u11
    }

    pub fn shield(&self) -> &QuantumState {
        &self.shield
    }
}

/// `½ Σ_{k,l} |kk⟩⟨ll| ⊗ U_kk ρ U_ll†` as a raw `4D×4D` matrix.
pub fn pbit_matrix(u00: &ComplexMatrix, u11: &ComplexMatrix, shield: &ComplexMatrix) -> ComplexMatrix {
    let d = shield.rows();
    let a = u00.matmul(shield).expect("dims checked");
    let b = u11.matmul(shield).expect("dims checked");
    let (u00h, u11h) = (u00.dagger(), u11.dagger());
    let b00 = a.matmul(&u00h).expect("dims checked").scale_real(0.5);
    let b03 = a.matmul(&u11h).expect("dims checked").scale_real(0.5);
    let b33 = b.matmul(&u11h).expect("dims checked").scale_real(0.5);
    let mut m = ComplexMatrix::zeros(4 * d, 4 * d);
    m.set_submatrix(0, 0, &b00);
    m.set_submatrix(0, 3 * d, &b03);
    m.set_submatrix(3 * d, 0, &b03.dagger());
    m.set_submatrix(3 * d, 3 * d, &b33);
    m.hermitian_part()
}

fn pbit_factors(shield: &QuantumState) -> Vec<FactorLabel> {
    let mut f = vec![FactorLabel::key(Party::Alice), FactorLabel::key(Party::Bob)];
    f.extend_from_slice(shield.factors());
    f
}

pub fn make_pbit(params: &PbitParams) -> Result<QuantumState> {
    let m = pbit_matrix(&params.u00, &params.u11, params.shield.matrix());
    QuantumState::new(m, pbit_factors(&params.shield))
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockForm {
    /// `blocks[a][b]` with `a = 2i+j`, `b = 2k+l`.
    pub blocks: [[ComplexMatrix; 4]; 4],
    pub shield_dims: (usize, usize),
}

impl BlockForm {
    pub fn block(&self, i: usize, j: usize, k: usize, l: usize) -> &ComplexMatrix {
        &self.blocks[2 * i + j][2 * k + l]
    }

    pub fn shield_dim(&self) -> usize {
        self.shield_dims.0 * self.shield_dims.1
    }

    pub fn reassemble(&self) -> ComplexMatrix {
        let d = self.shield_dim();
        let mut m = ComplexMatrix::zeros(4 * d, 4 * d);
        for a in 0..4 {
            for b in 0..4 {
                m.set_submatrix(a * d, b * d, &self.blocks[a][b]);
            }
        }
        m
    }

    /// Canonical `[A, B, A', B']` factors for [`Self::reassemble`].
    pub fn factors(&self) -> Vec<FactorLabel> {
        qstate::abab_factors(self.shield_dims.0, self.shield_dims.1)
    }

    pub fn to_state(&self) -> Result<QuantumState> {
        QuantumState::new(self.reassemble(), self.factors())
    }

    /// Builds a form from blocks; every block must be `D×D`.
    pub fn from_blocks(blocks: [[ComplexMatrix; 4]; 4], shield_dims: (usize, usize)) -> Result<Self> {
        let d = shield_dims.0 * shield_dims.1;
        if blocks.iter().flatten().any(|b| b.rows() != d || b.cols() != d) {
            return Err(Error::Shape(format!("every block must be {d}x{d}")));
        }
        Ok(Self { blocks, shield_dims })
    }
}

/// Checks the key factors and returns `(d_A', d_B')`.
pub fn shield_dims(s: &QuantumState) -> Result<(usize, usize)> {
    let f = s.factors();
    let key_ok = |x: &FactorLabel, owner| x.dim == 2 && x.owner == owner && x.role == Role::Key;
    if f.len() < 2 || !key_ok(&f[0], Party::Alice) || !key_ok(&f[1], Party::Bob) {
        return Err(Error::Shape(
            "first two factors must be qubit key factors owned by Alice then Bob".into(),
        ));
    }
    let mut da = 1;
    let mut db = 1;
    for x in &f[2..] {
        match (x.owner, x.role) {
            (_, Role::Key) => return Err(Error::Shape("more than two key factors".into())),
            (Party::Alice, _) => da *= x.dim,
            (Party::Bob, _) => db *= x.dim,
            (Party::Eve, _) => return Err(Error::Shape("state carries an Eve factor".into())),
        }
    }
    Ok((da, db))
}

pub fn blocks(s: &QuantumState) -> Result<BlockForm> {
    let dims = shield_dims(s)?;
    let d = dims.0 * dims.1;
    let m = s.matrix();
    let blocks = std::array::from_fn(|a| std::array::from_fn(|b| m.submatrix(a * d, b * d, d, d)));
    Ok(BlockForm {
        blocks,
        shield_dims: dims,
    })
}

pub fn a0011_norm(s: &QuantumState) -> Result<f64> {
    let form = blocks(s)?;
    trace_norm(form.block(0, 0, 1, 1))
}

/// `max(0, ½ − ‖A₀₀₁₁‖₁)`: no private state of matching dimensions is
/// closer than this in trace norm.
pub fn prop1_lower_bound(s: &QuantumState) -> Result<f64> {
    Ok((0.5 - a0011_norm(s)?).max(0.0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KeyCorrelation {
    pub p00: f64,
    pub p11: f64,
    pub eve_fidelity: f64,
    /// `√(p₀₀p₁₁)·eve_fidelity`
    pub product: f64,
}

pub fn key_correlation(s: &QuantumState) -> Result<KeyCorrelation> {
    let form = blocks(s)?;
    let p = |i: usize| -> Result<f64> { Ok(form.block(i, i, i, i).trace()?.re) };
    let (p00, p11) = (p(0)?, p(1)?);
    for (i, pi) in [(0u8, p00), (1u8, p11)] {
        if pi < tol::DEGENERATE_PROB {
            return Err(Error::DegenerateOutcome(i, pi));
        }
    }
    let psi = purify(s)?;
    let d = form.shield_dim();
    let r = psi.factors().last().expect("purifier").dim;
    let labels = [
        FactorLabel::shield(d, Party::Alice),
        FactorLabel {
            dim: r,
            owner: Party::Eve,
            role: Role::Purifier,
        },
    ];
    let eve = |i: usize| -> Result<QuantumState> {
        let off = 3 * i * d * r;
        let v = &psi.amplitudes()[off..off + d * r];
        let m = qstate::reduced_matrix(v, &labels, &[false, true])?;
        let tr = m.trace()?.re;
        QuantumState::new(m.scale_real(1.0 / tr), vec![labels[1]])
    };
    let eve_fidelity = fidelity(&eve(0)?, &eve(1)?)?;
    Ok(KeyCorrelation {
        p00,
        p11,
        eve_fidelity,
        product: (p00 * p11).sqrt() * eve_fidelity,
    })
}

/// Private-state test through `p₀₀ = p₁₁ = ½` and `‖A₀₀₁₁‖ = ½`; any
/// failure to evaluate (wrong shape, degenerate outcome) gives `false`.
pub fn is_pbit(s: &QuantumState, tol: f64) -> bool {
    let Ok(form) = blocks(s) else { return false };
    let p = |i: usize| form.block(i, i, i, i).trace().map(|t| t.re).unwrap_or(f64::NAN);
    let Ok(a) = trace_norm(form.block(0, 0, 1, 1)) else {
        return false;
    };
    (p(0) - 0.5).abs() <= tol && (p(1) - 0.5).abs() <= tol && (a - 0.5).abs() <= tol
}
