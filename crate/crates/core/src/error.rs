use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by tables, matrices, the execution engine and the learners.
#[derive(Debug, Error)]
pub enum Error {
    #[error("index {index} out of range (bound {bound})")]
    Index { index: usize, bound: usize },

    #[error("schema error: {0}")]
    Schema(String),

    #[error("user function failed on row {row}: {message}")]
    UserFunction { row: usize, message: String },

    #[error("operation requires a non-empty table")]
    EmptyTable,

    #[error("cannot cast cell at row {row}, column {col} to numeric: {reason}")]
    Cast {
        row: usize,
        col: usize,
        reason: String,
    },

    #[error("dimension mismatch: {0}")]
    Dim(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("matrix is singular (pivot {pivot:e} at column {col})")]
    SingularMatrix { col: usize, pivot: f64 },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("optimization diverged: {0}")]
    Divergence(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("partition {index} failed: {source}")]
    Partition {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    /// An I/O failure on `path`.
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Strips any `Partition` wrappers added by the engine.
    pub fn root(&self) -> &Error {
        match self {
            Error::Partition { source, .. } => source.root(),
            other => other,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
