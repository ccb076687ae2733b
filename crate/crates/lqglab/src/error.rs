use thiserror::Error;

/// Errors produced by samplers, estimators, and law checks.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter is outside the domain where the requested law or sampler is defined.
    #[error("invalid parameter: {0}")]
    Param(String),

    /// A numerical procedure (root find, quadrature, fit) failed to converge
    /// or was asked for something it cannot resolve.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// An estimator was given too little data to produce a meaningful verdict.
    #[error("insufficient data: {0}")]
    InsufficientData(String),

    /// The requested law is a non-normalizable (infinite) measure in this
    /// parameter regime and cannot be verified as stated.
    #[error("non-normalizable regime: {0}")]
    InfiniteMeasure(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn param(msg: impl Into<String>) -> Self {
        Error::Param(msg.into())
    }
    pub fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }
    pub fn insufficient_data(msg: impl Into<String>) -> Self {
        Error::InsufficientData(msg.into())
    }
}
