//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Shape disagreement between an operation's inputs.
    #[error("{context}: dimension mismatch, expected {expected}, got {actual}")]
    DimMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    /// NaN or infinity observed in a gradient tensor.
    #[error("non-finite gradient in tensor `{tensor}`")]
    NonFiniteGrad { tensor: String },

    /// NaN or infinity observed in a parameter tensor after an update.
    #[error("non-finite parameter in tensor `{tensor}` after optimizer step")]
    NonFiniteParam { tensor: String },

    /// A label that must be 0/1 held something else.
    #[error("non-binary label value {value} at row {row}, source {source_index}")]
    NonBinaryLabel {
        row: usize,
        source_index: usize,
        value: u8,
    },

    /// Ranking metrics need both classes present.
    #[error("{context}: needs both classes present (got {n_pos} positive / {n_neg} negative)")]
    SingleClass {
        context: &'static str,
        n_pos: usize,
        n_neg: usize,
    },

    #[error("empty batch passed to {context}")]
    EmptyBatch { context: &'static str },

    #[error("invalid configuration: {0}")]
    Config(String),

    /// CSV parse failure with the offending location (1-based line numbers).
    #[error("csv error at line {line}, column {column}: {message}")]
    Csv {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("snapshot format error: {0}")]
    Snapshot(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
