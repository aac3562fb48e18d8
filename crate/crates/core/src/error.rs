use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("total internal reflection")]
    TotalInternalReflection,
    #[error("every pixel of the receiver screen is dark")]
    AllDark,
    #[error("beam not found in the receiver field of view")]
    NotFound,
    #[error("link path solver did not converge")]
    NoPath,
    #[error("invalid environment state: {0}")]
    InvalidState(String),
    #[error("replay buffer holds {have} transitions, need {need}")]
    InsufficientData { have: usize, need: usize },
    #[error("shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("malformed parameter file: {0}")]
    Format(String),
    #[error("unsupported parameter file version {found} (expected {expected})")]
    Version { found: u32, expected: u32 },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}

/// Rejects NaN and values that fail `ok`.
pub(crate) fn check(value: f64, ok: bool, what: &str) -> Result<f64> {
    if value.is_nan() || !ok {
        Err(Error::domain(alloc::format!("{what} out of range: {value}")))
    } else {
        Ok(value)
    }
}
