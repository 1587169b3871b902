use thiserror::Error;

/// Errors produced by the estimation engine.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("numeric domain error: {0}")]
    NumericDomain(String),

    #[error("matrix is not positive definite (pivot {pivot}, value {value:e})")]
    NotSpd { pivot: usize, value: f64 },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("row {row}, column '{column}': {message}")]
    Ingestion {
        row: usize,
        column: String,
        message: String,
    },

    #[error("unsupported input: {0}")]
    Unsupported(String),

    #[error("quantile level {level} is not on the fitted grid")]
    LevelMismatch { level: f64 },

    #[error("chain {chain}, iteration {iteration}: {source}")]
    Sampler {
        chain: usize,
        iteration: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn param(msg: impl Into<String>) -> Error {
    Error::Parameter(msg.into())
}

pub(crate) fn dim(msg: impl Into<String>) -> Error {
    Error::Dimension(msg.into())
}
