use alloc::string::String;

/// Errors surfaced by the optimization core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParam { name: &'static str, reason: String },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("bit vector has length {found}, expected {expected}")]
    Encoding { expected: usize, found: usize },
    #[error("Gaussian process factorization failed even with jitter {jitter:e}")]
    DegenerateModel { jitter: f64 },
    #[error("model needs at least one observation")]
    NoObservations,
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParam {
        name,
        reason: reason.into(),
    }
}
