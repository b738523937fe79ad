use std::fmt;

/// Errors produced anywhere in the lab.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A parameter set that violates its documented invariants.
    #[error("configuration error: {0}")]
    Config(String),
    /// An operation was called in a way its contract forbids.
    #[error("usage error: {0}")]
    Usage(String),
    /// A Turing machine definition that is incomplete or inconsistent.
    #[error("malformed machine: {0}")]
    MalformedMachine(String),
    /// A text input (trace file, config file, machine file) failed to parse.
    #[error("{source_name}:{line}: {message}")]
    Parse {
        source_name: String,
        line: usize,
        message: String,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn config(msg: impl fmt::Display) -> Self {
        Error::Config(msg.to_string())
    }

    pub(crate) fn usage(msg: impl fmt::Display) -> Self {
        Error::Usage(msg.to_string())
    }

    pub(crate) fn parse(source_name: &str, line: usize, msg: impl fmt::Display) -> Self {
        Error::Parse {
            source_name: source_name.to_string(),
            line,
            message: msg.to_string(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
