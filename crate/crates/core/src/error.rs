use std::path::PathBuf;

use crate::driver::RunRecord;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("empty dataset")]
    EmptyDataset,

    #[error("empty scoreboard")]
    EmptyScoreboard,

    #[error("empty training subset")]
    EmptySubset,

    #[error("parse error at row {row}: {msg}")]
    Parse { row: usize, msg: String },

    #[error("row {row}: label {label} out of range for {classes} classes")]
    LabelOutOfRange {
        row: usize,
        label: usize,
        classes: usize,
    },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("non-finite gradient at epoch {epoch}, batch {batch}")]
    NonFiniteGradient { epoch: usize, batch: usize },

    #[error("id {id} out of range for {n} samples")]
    IdOutOfRange { id: usize, n: usize },

    #[error("k = {k} out of range for {n} samples")]
    KOutOfRange { k: usize, n: usize },

    #[error("corrupt snapshot: {0}")]
    CorruptSnapshot(String),

    #[error("config error at `{key}`: {msg}")]
    Config { key: String, msg: String },

    #[error("learner diverged during epoch {epoch}")]
    Diverged {
        epoch: usize,
        partial: Box<RunRecord>,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn config(key: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            msg: msg.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
