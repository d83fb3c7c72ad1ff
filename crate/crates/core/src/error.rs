use std::io;
use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    /// An input violated an operation's precondition (non-finite value, bad argument).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Vector lengths disagree.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// The data cannot support the requested construction (e.g. all-zero voltages).
    #[error("degenerate data: {0}")]
    DegenerateData(String),

    /// A dataset file failed to parse; `line` is 1-based within the file.
    #[error("dataset parse error at line {line}: {message}")]
    DatasetParse { line: usize, message: String },

    /// A model file failed to parse or validate.
    #[error("model file error: {0}")]
    ModelParse(String),

    /// A value exceeds the representable range of the 18-bit float format.
    #[error("range error: {0}")]
    Range(String),

    /// The pipeline lookup table has no entry for the requested voltage.
    #[error("lookup miss: voltage {voltage} V is not a lookup-table key")]
    LookupMiss { voltage: f64 },

    /// Two dataset rows carry the same voltage key.
    #[error("duplicate lookup key: voltage {voltage} V")]
    DuplicateKey { voltage: f64 },

    /// Two curves cannot be aligned point by point.
    #[error("alignment error: {0}")]
    Alignment(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
