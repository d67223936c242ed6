use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid parameters: {0}")]
    InvalidParameters(String),

    /// The density matrix left the physical region during integration.
    #[error("integration quality failure at step {step}: {reason}")]
    IntegrationQuality { step: usize, reason: String },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameters(msg.into())
    }

    /// True for errors raised by the integrator's physicality checks.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::IntegrationQuality { .. })
    }
}
