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

    #[error("malformed image file: {0}")]
    ImageFormat(String),

    /// Dimensions, channel counts or sample ranges that the operation can't accept.
    #[error("invalid image: {0}")]
    InvalidImage(String),

    #[error("invalid weight table: {0}")]
    Weights(String),

    #[error("budget infeasible: {needed} bits needed, {available} available")]
    BudgetInfeasible { needed: u64, available: u64 },

    #[error("malformed bitstream: {0}")]
    Bitstream(String),

    #[error("optimizer: {0}")]
    Optimizer(String),

    #[error("metric: {0}")]
    Metric(String),

    #[error("run spec: {0}")]
    Spec(String),

    #[error("external command: {0}")]
    External(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
