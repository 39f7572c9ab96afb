//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed vertex word: {0}")]
    MalformedWord(String),
    #[error("vertex {0} is outside the ball")]
    OutsideBall(String),
    #[error("state space too large: need {needed} states, cap is {cap}")]
    CapExceeded { needed: u128, cap: u128 },
    #[error("{what} out of range: {details}")]
    OutOfRange { what: &'static str, details: String },
    #[error("duplicate sites in tuple")]
    DuplicateSites,
    #[error("function is not centered under nu_p (mean = {mean:.3e}); run center() first")]
    NotCentered { mean: f64 },
    #[error("linear solver failed: {0}")]
    SolverFailure(String),
    #[error("overflow guard tripped: {0}")]
    OverflowGuard(String),
    #[error("samples disagree on {0}")]
    MixedSamples(&'static str),
    #[error("cutoff U={given} too small for tolerance; need U >= {required:.2}")]
    CutoffTooSmall { given: f64, required: f64 },
    #[error("config field `{field}`: {message}")]
    Config { field: String, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn config(field: &str, message: impl Into<String>) -> Self {
        Error::Config { field: field.to_string(), message: message.into() }
    }

    /// Process exit code the CLI maps this error to.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config { .. } => 2,
            Error::CapExceeded { .. } => 3,
            _ => 1,
        }
    }
}
