use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("validation error: {0}")]
    Validation(String),

    #[error("dimension {requested} exceeds the configured cap of {cap}")]
    Capacity { requested: u128, cap: usize },

    #[error(
        "privacy budget exceeded on register {register}: spent {spent}, requested {requested}, budget {budget}"
    )]
    BudgetExceeded {
        register: usize,
        spent: f64,
        requested: f64,
        budget: f64,
    },

    #[error("measurement is only {required}-trivial but {declared} was declared")]
    NotTrivialEnough { required: f64, declared: f64 },

    #[error("rejection sampler did not accept within {0} iterations")]
    MaxIterationsExceeded(u64),

    #[error("insufficient copies: {required} required, {available} available")]
    InsufficientCopies { required: u64, available: u64 },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    /// Process exit code used by the CLI.
    pub fn exit_code(&self) -> u8 {
        match self {
            Error::Validation(_) | Error::Capacity { .. } | Error::InsufficientCopies { .. } => 2,
            Error::BudgetExceeded { .. } => 3,
            Error::NotTrivialEnough { .. } => 4,
            Error::MaxIterationsExceeded(_) | Error::Io { .. } => 1,
        }
    }
}
