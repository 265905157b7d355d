use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("LP solver failure: {0}")]
    Solver(String),
    #[error("state space of {states} labelings exceeds the cap of {cap}")]
    CapExceeded { states: f64, cap: u64 },
    #[error("non-integral indicator xi[{node}][{label}] = {value}")]
    NonIntegral { node: usize, label: usize, value: f64 },
    #[error("refused: {0}")]
    Refused(String),
    #[error("verification failed: {0}")]
    Verification(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidInput(msg.into()))
}
