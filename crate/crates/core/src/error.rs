use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    Dimension(String),

    #[error("index {index} out of range (must be < {bound})")]
    IndexOutOfRange { index: usize, bound: usize },

    #[error("bit length mismatch: expected {expected}, got {got}")]
    BitLength { expected: usize, got: usize },

    #[error("{0} must be a power of two, got {1}")]
    NotPowerOfTwo(&'static str, usize),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("argument {s} lies in the pole region of the MGF (1 - 2 sigma^2 s = {denom})")]
    MgfPole { s: f64, denom: f64 },

    #[error("channel realization carries no direct links")]
    MissingDirectLink,

    #[error("search budget exceeded: {needed} evaluations requested, budget is {budget}")]
    BudgetExceeded { needed: u128, budget: u128 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, message: impl ToString) -> Self {
        Error::Format {
            path: path.into(),
            message: message.to_string(),
        }
    }
}
