use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ErpxError {
    /// A caller broke an operation's precondition.
    #[error("contract violation: {0}")]
    Contract(String),
    /// The data cannot support the requested computation.
    #[error("data error: {0}")]
    Data(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl ErpxError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        ErpxError::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, ErpxError>;

macro_rules! contract {
    ($cond:expr, $($arg:tt)+) => {
        if !$cond {
            return Err($crate::error::ErpxError::Contract(format!($($arg)+)));
        }
    };
}
pub(crate) use contract;
