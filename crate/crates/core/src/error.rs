use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the simulation library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("non-finite value {value} at sample {index}")]
    NonFinite { index: usize, value: f64 },

    #[error("message undersampled: dt = {dt} s must be below half the period ({half_period} s)")]
    Undersampled { dt: f64, half_period: f64 },

    #[error("simulation diverged at t = {time:.9} s (|state| exceeded {guard} V)")]
    Diverged { time: f64, guard: f64 },

    #[error("trace mismatch: {0}")]
    TraceMismatch(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("too few bits after settling: {found} (need at least {needed})")]
    TooFewBits { found: usize, needed: usize },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("malformed CSV in {path}: {reason}")]
    MalformedCsv { path: PathBuf, reason: String },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
