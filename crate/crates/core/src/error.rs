use std::path::PathBuf;

/// Errors produced while building graphs, configuring runs, replaying
/// realizations or writing results.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid configuration `{field}`: {message}")]
    Config { field: &'static str, message: String },

    #[error("graph is not strongly connected")]
    NotStronglyConnected,

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("dimension mismatch: expected {expected}x{expected}, got {actual}x{actual}")]
    Dimension { expected: usize, actual: usize },

    #[error("inconsistent realization at slot {slot}: {message}")]
    Realization { slot: usize, message: String },

    #[error("unknown graph preset `{0}`")]
    UnknownPreset(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn config(field: &'static str, message: impl Into<String>) -> Self {
        Error::Config { field, message: message.into() }
    }

    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse { line, message: message.into() }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    /// Short machine-readable category, used by the CLI error line.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Parse { .. } => "parse",
            Error::Config { .. } => "config",
            Error::NotStronglyConnected => "not_strongly_connected",
            Error::LengthMismatch { .. } => "length_mismatch",
            Error::Dimension { .. } => "dimension",
            Error::Realization { .. } => "realization",
            Error::UnknownPreset(_) => "unknown_preset",
            Error::Io { .. } => "io",
            Error::Csv(_) => "csv",
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
