use thiserror::Error;

/// Errors raised by library operations.
///
/// The variants line up with the CLI exit codes: invalid input (2),
/// resource limits (3) and numerical failures (4).
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("resource limit exceeded: {0}")]
    ResourceLimit(String),

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("diagnostic failure: {message}")]
    DiagnosticFailure { message: String, trace: Vec<String> },

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

macro_rules! invalid {
    ($($arg:tt)*) => {
        $crate::error::Error::InvalidArgument(format!($($arg)*))
    };
}

pub(crate) use invalid;
