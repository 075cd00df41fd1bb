use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("Laguerre type must satisfy delta > -1, got {0}")]
    InvalidLaguerreType(f64),

    #[error("adaptive quadrature did not converge: {0}")]
    QuadratureFailure(String),

    #[error("scale parameter a must be nonzero")]
    ZeroScale,

    #[error("grid does not resolve the requested functions: {0}")]
    Unresolved(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("field is not effectively supported inside its grid: {0}")]
    SupportViolation(String),

    #[error("frequency outside the resolved dual grid: {0}")]
    FrequencyOutOfRange(String),

    #[error("inadmissible exponents: {0}")]
    Inadmissible(String),

    #[error("malformed data: {0}")]
    Format(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Format(e.to_string())
    }
}
