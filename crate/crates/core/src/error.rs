use thiserror::Error;

/// Errors raised by the problem model, the neighbor index and the engine.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("generation error: {0}")]
    Generation(String),

    #[error("index {index} out of range for pool of size {len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("neighbor rank {k} exceeds pool size {len}")]
    RankOutOfRange { k: usize, len: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("empty pool")]
    EmptyPool,

    #[error("classifier support is empty")]
    EmptySupport,

    #[error("unknown problem `{0}`")]
    UnknownProblem(String),

    #[error("problem dimension must be 1, got {0}")]
    NotOneDimensional(usize),

    #[error("need at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },

    #[error("io error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
