use std::path::PathBuf;

/// Errors produced by the analysis, emulation and capture routines.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Malformed input text. `line` is 1-based within the source file.
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    /// Well-formed input that violates a documented precondition.
    #[error("invalid input: {0}")]
    Validation(String),

    /// Not enough signal structure to take the requested measurement.
    #[error("measurement error: {0}")]
    Measurement(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::Validation(msg.into())
}

pub(crate) fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        line,
        msg: msg.into(),
    }
}
