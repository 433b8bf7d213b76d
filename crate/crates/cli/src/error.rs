use gns_lattice::Error;
use thiserror::Error as ThisError;

#[derive(Debug, ThisError)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("numerical diagnostic failed: {0}")]
    Numerical(Error),
    #[error("numerical diagnostic failed: {0}")]
    Diagnostic(String),
    #[error("resource cap exceeded: {0}")]
    Cap(Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) | CliError::Diagnostic(_) => 3,
            CliError::Cap(_) => 4,
            CliError::Io(_) => 1,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::CapExceeded { .. } => CliError::Cap(e),
            Error::InvalidTruncation(_)
            | Error::OccupationOutOfRange { .. }
            | Error::TruncationMismatch { .. }
            | Error::InvalidParameter(_)
            | Error::WindowTooSmall(_)
            | Error::InvalidBackground(_)
            | Error::NegativeTime(_) => CliError::Config(e.to_string()),
            _ => CliError::Numerical(e),
        }
    }
}
