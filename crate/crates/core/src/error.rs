use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Error, Debug)]
pub enum Error {
    /// Argument outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Invalid or inconsistent configuration.
    #[error("config error: {0}")]
    Config(String),

    /// Operation requested in a mode it does not support
    /// (e.g. spectral evaluation with a non-Maxwellian kinetic factor).
    #[error("unsupported mode: {0}")]
    Unsupported(String),

    /// Iterative scheme stopped making progress.
    #[error("divergence: {0}")]
    Divergence(String),

    /// Numerical stability guard tripped (negativity, non-finite values).
    #[error("stability error: {0}")]
    Stability(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Serde(String),
}

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
    pub fn unsupported(msg: impl Into<String>) -> Self {
        Error::Unsupported(msg.into())
    }
}
