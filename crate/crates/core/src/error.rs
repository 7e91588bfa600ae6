use thiserror::Error;

/// Errors raised by the simulators, oracles and experiment runner.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid time grid: {0}")]
    InvalidGrid(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("non-finite evaluation of {what} at t = {at}")]
    NonFinite { what: String, at: f64 },

    #[error("truncated semigroup lost positivity at x = {x} (value {value:e}); increase the truncation order")]
    PositivityLoss { x: f64, value: f64 },

    #[error("{aborted} of {paths} paths aborted on a non-finite state (limit {limit} paths)")]
    TooManyAborted {
        aborted: usize,
        paths: usize,
        limit: usize,
    },

    #[error("relative standard error {rel:.4} exceeds {limit}")]
    RelativeErrorTooLarge { rel: f64, limit: f64 },

    #[error("relative entropy came out negative ({0:e})")]
    NegativeEntropy(f64),

    #[error(
        "entropy-production constant n*kappa - 2*C_T = {0:e} is not positive; increase the horizon"
    )]
    CurvatureTooSmall(f64),

    #[error("unknown experiment `{0}`")]
    UnknownExperiment(String),

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
