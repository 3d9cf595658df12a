use std::io;

use thiserror::Error;

/// Errors raised by the library.
///
/// Variants are grouped so a front end can map them onto a small set of
/// exit codes: configuration problems, bad input data, and internal
/// invariant breaches.
#[derive(Debug, Error)]
pub enum Error {
    #[error("io error: {0}")]
    Io(#[from] io::Error),

    #[error("format error at line {line}: {message}")]
    Format { line: usize, message: String },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("insufficient history: need {needed}, have {available}")]
    InsufficientHistory { needed: String, available: String },

    #[error("length mismatch: {0}")]
    Length(String),

    #[error("invariant breached at bin {bin}: {message}")]
    Invariant { bin: usize, message: String },
}

/// Coarse category of an [`Error`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Config,
    Data,
    Internal,
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Parameter(_) | Error::Config(_) => ErrorClass::Config,
            Error::Io(_)
            | Error::Format { .. }
            | Error::InsufficientHistory { .. }
            | Error::Length(_) => ErrorClass::Data,
            Error::Invariant { .. } => ErrorClass::Internal,
        }
    }

    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }
}

impl From<csv::Error> for Error {
    fn from(err: csv::Error) -> Self {
        let line = err
            .position()
            .map(|p| p.line() as usize)
            .unwrap_or_default();
        match err.into_kind() {
            csv::ErrorKind::Io(e) => Error::Io(e),
            other => Error::Format {
                line,
                message: format!("{other:?}"),
            },
        }
    }
}

impl From<serde_json::Error> for Error {
    fn from(err: serde_json::Error) -> Self {
        Error::Format {
            line: err.line(),
            message: err.to_string(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
