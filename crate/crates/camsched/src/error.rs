//! Crate-wide error type.

use std::path::PathBuf;

/// Errors surfaced by the library and mapped to process exit codes by the CLI.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Filesystem failure (missing file, unreadable path, write error).
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// Malformed input data, reported with the offending line.
    #[error("parse error in {path} at line {line}: {msg}")]
    Parse {
        path: PathBuf,
        line: u64,
        msg: String,
    },

    /// Structurally valid input that violates a domain invariant.
    #[error("validation error: {msg}")]
    Validation { msg: String },

    /// Bad configuration value or a violated API precondition.
    #[error("config error: {msg}")]
    Config { msg: String },

    /// Discretized state space too large to tabulate.
    #[error("state space too large: {required} keys exceed budget of {budget}")]
    Capacity { required: u64, budget: u64 },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn parse(path: impl Into<PathBuf>, line: u64, msg: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            msg: msg.into(),
        }
    }

    pub fn validation(msg: impl Into<String>) -> Self {
        Error::Validation { msg: msg.into() }
    }

    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config { msg: msg.into() }
    }

    /// Process exit code for the CLI: 2 for i/o failures, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io { .. } => 2,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
