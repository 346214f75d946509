use thiserror::Error;

/// Errors produced by model construction, parsing and the solver pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("enumeration space too large: {size} labelings exceed cap {cap}")]
    CapExceeded { size: u128, cap: u128 },

    #[error("LP solver failed: {0}")]
    Solver(String),

    #[error("integrality failure: {0}")]
    NumericIntegrality(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
