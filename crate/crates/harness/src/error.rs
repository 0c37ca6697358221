use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid experiment: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Core(#[from] sfo_core::Error),

    #[error("CSV output: {0}")]
    Csv(#[from] csv::Error),

    #[error("PNG output: {0}")]
    Png(#[from] png::EncodingError),

    #[error("plot output: {0}")]
    Plot(String),
}

pub type Result<T> = std::result::Result<T, Error>;
