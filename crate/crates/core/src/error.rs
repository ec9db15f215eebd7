use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("{}: blank document at line {line}", path.display())]
    BlankDocument { path: PathBuf, line: usize },

    #[error("{}: corpus contains no documents", path.display())]
    EmptyCorpus { path: PathBuf },

    #[error("{}: blank label at line {line}", path.display())]
    BlankLabel { path: PathBuf, line: usize },

    #[error("label count {labels} != document count {documents}")]
    LabelCount { labels: usize, documents: usize },

    #[error("{}: line {line}: {message}", path.display())]
    Format {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{}: {message}", path.display())]
    Paras { path: PathBuf, message: String },

    #[error("invalid hyperparameter: {0}")]
    Hyperparams(String),

    #[error("invalid sampling weights: {0}")]
    InvalidWeights(String),

    #[error("count underflow: {0}")]
    CountUnderflow(String),

    #[error("count invariant violated: {0}")]
    Invariant(String),

    #[error("length mismatch: {clusters} cluster assignments vs {labels} labels")]
    LengthMismatch { clusters: usize, labels: usize },

    #[error("{}: no file name ends with {pattern:?}", dir.display())]
    NoMatchingFiles { dir: PathBuf, pattern: String },

    #[error("{}: {rows} theta rows != {labels} labels", file.display())]
    RowCount {
        file: PathBuf,
        rows: usize,
        labels: usize,
    },

    #[error("empty probability row")]
    EmptyRow,

    #[error("{0}")]
    Usage(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
