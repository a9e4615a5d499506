use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid target {0}: Bernoulli log-loss requires targets in {{0, 1}}")]
    InvalidTarget(f64),

    #[error("empty sequence")]
    EmptySequence,

    #[error("empty action set")]
    EmptyActionSet,

    #[error("invalid action {action} (num_actions = {num_actions})")]
    InvalidAction { action: usize, num_actions: usize },

    #[error("unknown context/action pair ({context}, {action})")]
    UnknownPair { context: usize, action: usize },

    #[error("insufficient history: need {needed}, have {have}")]
    InsufficientHistory { needed: usize, have: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("degenerate covariance: {0}")]
    DegenerateCovariance(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        Error::Shape(msg.into())
    }

    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
