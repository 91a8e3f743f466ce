use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A [`SystemConfig`](crate::waveform::SystemConfig) or experiment
    /// invariant does not hold. The message names the violated invariant.
    #[error("configuration error: {0}")]
    Config(String),

    #[error("zero pilot on occupied subcarrier {bin}")]
    DivisionHazard { bin: usize },

    #[error("contract violation: {0}")]
    ContractViolation(String),

    #[error("CIR windows overlap: {num_tx} transmitters x {n_cp} samples > {n_fft}")]
    WindowOverlap {
        num_tx: usize,
        n_cp: usize,
        n_fft: usize,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
