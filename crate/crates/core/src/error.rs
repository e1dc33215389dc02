use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
#[non_exhaustive]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("coordinate {index} = {value} outside bounds [{lower}, {upper}]")]
    Bounds {
        index: usize,
        value: f64,
        lower: f64,
        upper: f64,
    },

    #[error("exact hypervolume supports 2 or 3 objectives, got {0}")]
    UnsupportedDimension(usize),

    #[error("front data file {path}: {message}")]
    DataFile { path: PathBuf, message: String },

    #[error("front data file {path} row {row} does not dominate the reference point")]
    FrontReferenceMismatch { path: PathBuf, row: usize },

    #[error("gaussian process fit failed: {0}")]
    Fit(String),

    #[error("non-finite activation in layer {layer}")]
    Numerical { layer: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("evaluation budget of {budget} exhausted")]
    BudgetExhausted { budget: usize },

    #[error("config error: {0}")]
    Config(String),

    #[error("checkpoint version {found} is not supported (expected {expected})")]
    CheckpointVersion { found: u32, expected: u32 },

    #[error("corrupt checkpoint: {0}")]
    CorruptCheckpoint(String),

    #[error("run logs are not aligned: {0}")]
    Alignment(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
