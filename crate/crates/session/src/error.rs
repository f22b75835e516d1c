use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum SessionError {
    #[error("invalid session config: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] hilts_core::Error),
    #[error("session log {path}: {source}")]
    Log {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("session log line {line}: {msg}")]
    LogFormat { line: usize, msg: String },
    #[error("session is no longer running")]
    Stopped,
}
