use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Core(#[from] hydrolink_core::Error),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    /// Stable short tag for machine-readable error lines.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Core(hydrolink_core::Error::Domain(_)) | Error::Config(_) => "config",
            Error::Core(hydrolink_core::Error::Config(_)) => "config",
            Error::Core(hydrolink_core::Error::Format(_) | hydrolink_core::Error::Version { .. }) => "format",
            Error::Core(_) => "simulation",
            Error::Io { .. } => "io",
            Error::Json(_) | Error::Csv(_) => "format",
        }
    }
}
