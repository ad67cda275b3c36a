use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {message}")]
    MalformedRow {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{path}:{line}: cannot parse {value:?} in column {column} as a number")]
    UnparseableField {
        path: PathBuf,
        line: usize,
        column: usize,
        value: String,
    },

    #[error("expected exactly two classes, found {found}")]
    ClassCount { found: usize },

    #[error("class {label} is empty")]
    EmptyClass { label: i8 },

    #[error("dataset {name}: {message}")]
    RegistryMismatch { name: String, message: String },

    #[error("registry: {0}")]
    Registry(String),

    #[error("unknown dataset {0:?}")]
    UnknownDataset(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("multiplier m={m} is below the minimum n_minus/n_plus = {min}")]
    MultiplierTooSmall { m: f64, min: f64 },

    #[error("not enough samples: {0}")]
    TooFewSamples(String),

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("repetition {rep}, fold {fold}: {source}")]
    Fold {
        rep: usize,
        fold: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("result log: {0}")]
    ResultLog(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
