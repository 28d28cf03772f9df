use thiserror::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_PARAMETER: i32 = 2;
pub const EXIT_MALFORMED: i32 = 3;
pub const EXIT_COMPUTATION: i32 = 4;
pub const EXIT_INTERNAL: i32 = 5;

/// Messages are complete; the variant only selects the exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Parameter(String),

    #[error("{0}")]
    Malformed(String),

    #[error("{0}")]
    Computation(String),

    #[error("{0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parameter(_) => EXIT_PARAMETER,
            CliError::Malformed(_) => EXIT_MALFORMED,
            CliError::Computation(_) => EXIT_COMPUTATION,
            CliError::Internal(_) => EXIT_INTERNAL,
        }
    }
}

impl From<ppt_pbit::Error> for CliError {
    fn from(e: ppt_pbit::Error) -> Self {
        use ppt_pbit::Error as E;
        let msg = e.to_string();
        match e {
            E::Parameter(_) | E::Selector(_) | E::Dimension(_) | E::SizeCap { .. } | E::Normalization(_) => {
                CliError::Parameter(msg)
            }
            E::InvalidState(_) | E::NotPsd(_) | E::Shape(_) => CliError::Malformed(msg),
            E::InternalConsistency(_) => CliError::Internal(msg),
            _ => CliError::Computation(msg),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
