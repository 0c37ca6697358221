use thiserror::Error;

/// Errors raised by the simulation library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: String, got: String },

    #[error("sample stream too short: need {needed} samples, have {available}")]
    StreamTooShort { needed: usize, available: usize },

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("zero-valued reference symbol at row {row}, column {col}")]
    ZeroReference { row: usize, col: usize },

    #[error("need at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("empty input: {0}")]
    Empty(&'static str),
}

pub type Result<T> = std::result::Result<T, Error>;
