use thiserror::Error;

/// Errors produced anywhere in the training and scoring pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("matrix not positive definite (pivot {pivot:.3e} at column {col})")]
    NotPositiveDefinite { col: usize, pivot: f64 },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("protocol error: {0}")]
    Protocol(String),

    #[error("communication timeout: {0}")]
    Timeout(String),

    #[error("model file: {0}")]
    Model(String),

    #[error("training aborted: {0}")]
    Train(String),

    #[error("internal error: {0}")]
    Internal(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
