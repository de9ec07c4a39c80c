use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("index {index} out of range (len {len})")]
    Index { index: usize, len: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("format error at byte {offset}: {msg}")]
    Format { offset: u64, msg: String },

    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("invalid input: {0}")]
    Input(String),

    #[error("cells {first} and {second} both claim pixel ({row}, {col})")]
    Conflict {
        row: usize,
        col: usize,
        first: u16,
        second: u16,
    },

    #[error("class {class} has a positive score but zero area")]
    ZeroAreaClass { class: usize },

    #[error("resource limit: {0}")]
    Resource(String),

    #[error("empty domain: {0}")]
    EmptyDomain(String),

    #[error("no mapping for source label {0}")]
    UnmappedLabel(u16),

    #[error("map is zero everywhere; no top-1 prediction")]
    NoPrediction,

    #[error("cannot balance: bucket {0} has no images")]
    EmptyBucket(u16),

    #[error("join error: {0}")]
    Join(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn csv(path: impl Into<PathBuf>, source: csv::Error) -> Self {
        Error::Csv {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(offset: u64, msg: impl Into<String>) -> Self {
        Error::Format {
            offset,
            msg: msg.into(),
        }
    }

    /// Process exit code for the CLI: 2 for unreadable or malformed files,
    /// 3 for everything that is a data-consistency problem.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Format { .. } | Error::Io { .. } | Error::Csv { .. } => 2,
            _ => 3,
        }
    }
}
