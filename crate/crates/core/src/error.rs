use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("index out of range: {0}")]
    IndexOutOfRange(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// The requested computation is not available for this configuration.
    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("scenario file: {0}")]
    ScenarioFile(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn scenario(msg: impl Into<String>) -> Self {
        Error::InvalidScenario(msg.into())
    }
}
