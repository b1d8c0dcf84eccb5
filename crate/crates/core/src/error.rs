use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: malformed header: {msg}")]
    Header { line: usize, msg: String },
    #[error("line {line}, column `{column}`: non-numeric value `{value}`")]
    NonNumeric {
        line: usize,
        column: String,
        value: String,
    },
    #[error("line {line}: class label `{value}` is not in 0..{n_classes}")]
    LabelOutOfRange {
        line: usize,
        value: String,
        n_classes: usize,
    },
    #[error("line {line}: duplicate id `{id}`")]
    DuplicateId { line: usize, id: String },
    #[error("line {line}: expected {expected} fields, found {found}")]
    RowLength {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("line {line}: non-finite feature value in column `{column}`")]
    NonFinite { line: usize, column: String },
    #[error("split file: {0}")]
    SplitFile(String),
    #[error("degenerate split: {0}")]
    DegenerateSplit(String),
    #[error("empty input: {0}")]
    Empty(&'static str),
    #[error("pool mismatch: {0}")]
    PoolMismatch(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("dimension mismatch: expected {expected}, got {got} ({context})")]
    DimensionMismatch {
        expected: usize,
        got: usize,
        context: &'static str,
    },
    #[error("task mismatch: {0}")]
    TaskMismatch(String),
    #[error("metric undefined: {0}")]
    Undefined(String),
    #[error("kernel matrix not positive definite after jitter {jitter:e}")]
    NotPositiveDefinite { jitter: f64 },
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error("{cell}: {source}")]
    Cell {
        cell: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn in_cell(self, cell: impl Into<String>) -> Self {
        Error::Cell {
            cell: cell.into(),
            source: Box::new(self),
        }
    }
}
