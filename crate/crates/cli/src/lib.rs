//! File formats, curve resolution and the result cache behind the
//! `supertr` binary.

pub mod cache;
pub mod results;
pub mod spec;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("spec error: {0}")]
    Spec(String),
    #[error("{0}")]
    Core(#[from] supertr::Error),
    #[error("mismatch: {0}")]
    Mismatch(String),
    #[error("check failed: {0}")]
    Failed(String),
    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> CliError {
        CliError::Io(e.to_string())
    }
}

impl CliError {
    /// 2 spec parse, 3 truncation insufficient, 4 mismatch or failed check,
    /// 5 anything internal.
    pub fn exit_code(&self) -> i32 {
        use supertr::Error as E;
        match self {
            CliError::Spec(_) => 2,
            CliError::Core(e) => match e {
                E::Parse(_) | E::InvalidCurve(_) | E::UnknownCurve(_) | E::Stability(_) | E::RingMismatch | E::SingularLeading => 2,
                E::Truncation(_) => 3,
                E::BothRoutesDisagree(_) => 4,
                _ => 5,
            },
            CliError::Mismatch(_) | CliError::Failed(_) => 4,
            CliError::Io(_) => 5,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
