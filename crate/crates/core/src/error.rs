use std::path::PathBuf;

use thiserror::Error;

/// Errors raised across the library. Each variant maps to a CLI exit code.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("sample too small: {0}")]
    SampleTooSmall(String),

    #[error("invalid mapping: {0}")]
    InvalidMapping(String),

    #[error("infeasible: {what} (requires {required} evaluations, budget {budget})")]
    Infeasible {
        what: String,
        required: u128,
        budget: u128,
    },

    #[error("not enough distinct vertex sets: requested {requested}, only {available} exist")]
    NotEnoughCliques { requested: usize, available: u128 },

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("{path}: {msg}")]
    Data { path: PathBuf, msg: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("internal invariant violated: {0}")]
    Invariant(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code: 2 for bad parameters or input, 3 for an infeasible
    /// budget, 4 for I/O failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidParameter(_)
            | Error::SampleTooSmall(_)
            | Error::InvalidMapping(_)
            | Error::Parse { .. }
            | Error::Data { .. } => 2,
            Error::Infeasible { .. } | Error::NotEnoughCliques { .. } => 3,
            Error::Io { .. } => 4,
            Error::Invariant(_) => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
