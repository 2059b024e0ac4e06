use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument broke a documented precondition (dimension mismatch,
    /// out-of-range index, non-positive hyperparameter, ...).
    #[error("contract violation: {0}")]
    Contract(String),

    /// The regularized Gram matrix could not be factorized even after the
    /// jitter retry.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// Selection found no candidate in the union of maximizers and expanders.
    #[error("no candidates left to evaluate at iteration {iteration}")]
    NoCandidates { iteration: usize },

    /// The GP lower bounds certify no parameter as safe at the requested context.
    #[error("no safe seed at context {context:?}")]
    NoSafeSeed { context: Vec<f64> },

    /// The objective evaluator failed.
    #[error("objective evaluation failed at point {point}: {message}")]
    Evaluation { point: usize, message: String },

    #[error("config error in `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("trace format error: {0}")]
    Trace(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn contract(msg: impl Into<String>) -> Error {
    Error::Contract(msg.into())
}

pub(crate) fn config_err(field: impl Into<String>, msg: impl Into<String>) -> Error {
    Error::Config {
        field: field.into(),
        message: msg.into(),
    }
}
