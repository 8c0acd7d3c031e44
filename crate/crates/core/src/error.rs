use thiserror::Error;

/// Errors produced by the tensor library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid shape: {0}")]
    InvalidShape(String),
    #[error("data length {len} does not match shape product {expected}")]
    LengthMismatch { len: usize, expected: usize },
    #[error("shape mismatch: {left:?} vs {right:?}")]
    ShapeMismatch { left: Vec<usize>, right: Vec<usize> },
    #[error("mode {mode} out of range for a {ndim}-dimensional tensor")]
    ModeOutOfRange { mode: usize, ndim: usize },
    #[error("rank {rank} out of range (allowed 1..={max})")]
    RankOutOfRange { rank: usize, max: usize },
    #[error("input contains non-finite values")]
    NonFinite,
    #[error("empty input: {0}")]
    Empty(&'static str),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("incompatible schedule: {0}")]
    Schedule(String),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
