use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Broad failure class, used by front ends to pick an exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// Input data is missing, malformed or inconsistent.
    Data,
    /// A computation produced or received non-finite values.
    Numeric,
    /// A statistic is undefined for the given input.
    Degenerate,
    /// A caller passed an invalid argument.
    Usage,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("dimension mismatch: expected {expected}, found {found}{}", context_suffix(.context))]
    DimensionMismatch {
        expected: usize,
        found: usize,
        context: String,
    },
    #[error("duplicate record id {0:?}")]
    DuplicateId(String),
    #[error("empty dataset file {0}")]
    EmptyFile(PathBuf),
    #[error("invalid record {id:?}: {message}")]
    InvalidRecord { id: String, message: String },
    #[error("invalid span [{start}, {end}) over {len} tokens")]
    InvalidSpan { start: usize, end: usize, len: usize },
    #[error("vector has zero norm")]
    ZeroNorm,
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("empty input: {0}")]
    EmptyInput(&'static str),
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("class {label:?} has {available} records, {requested} requested")]
    InsufficientClass {
        label: String,
        available: usize,
        requested: usize,
    },
    #[error("training set has a single class {0:?}; at least two are required")]
    SingleClass(String),
    #[error("difference vector has zero variance; t statistic is undefined")]
    ZeroVariance,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("malformed JSON document: {0}")]
    Json(#[from] serde_json::Error),
}

fn context_suffix(context: &str) -> String {
    if context.is_empty() {
        String::new()
    } else {
        format!(" ({context})")
    }
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::NonFinite(_) => ErrorKind::Numeric,
            Error::ZeroVariance => ErrorKind::Degenerate,
            Error::InvalidArgument(_) => ErrorKind::Usage,
            _ => ErrorKind::Data,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
