use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("no products")]
    NoProducts,

    #[error("duplicate product id `{0}`")]
    DuplicateProduct(String),

    #[error("product `{0}` references no topic")]
    ProductWithoutTopic(String),

    #[error("unknown topic `{0}`")]
    UnknownTopic(String),

    #[error("unknown product `{0}`")]
    UnknownProduct(String),

    #[error("product index {index} out of range for topic of size {len}")]
    ProductOutOfRange { index: usize, len: usize },

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("entity pool is empty")]
    EmptyPool,

    #[error("session already finished")]
    SessionFinished,

    #[error("model: {0}")]
    Model(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    /// True for errors caused by malformed or inconsistent input data, as
    /// opposed to misuse of the API or internal failures.
    pub fn is_data_error(&self) -> bool {
        matches!(
            self,
            Error::Parse { .. }
                | Error::NoProducts
                | Error::DuplicateProduct(_)
                | Error::ProductWithoutTopic(_)
                | Error::UnknownTopic(_)
                | Error::UnknownProduct(_)
                | Error::Model(_)
                | Error::Io { .. }
                | Error::Json(_)
                | Error::EmptyPool
        )
    }
}
