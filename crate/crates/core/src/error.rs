use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("shape error: {0}")]
    Shape(String),

    #[error("matrix is not positive semi-definite (min eigenvalue {0:e})")]
    NotPsd(f64),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("invalid factor selector: {0}")]
    Selector(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("amplitudes not normalized (squared norm {0})")]
    Normalization(f64),

    #[error("degenerate key outcome: p{0}{0} = {1:e}")]
    DegenerateOutcome(u8, f64),

    #[error("dimension {dim} exceeds cap {cap}")]
    SizeCap { dim: usize, cap: usize },

    #[error("construction failed: {0}")]
    Construction(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("not applicable: {0}")]
    NotApplicable(String),

    #[error("sampling failed after {0} attempts")]
    Sampling(usize),

    #[error("eigensolver did not converge after {0} sweeps")]
    NoConvergence(usize),

    #[error("internal consistency violated: {0}")]
    InternalConsistency(String),
}

pub type Result<T> = std::result::Result<T, Error>;
