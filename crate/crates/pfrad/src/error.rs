use num_complex::Complex64;
use thiserror::Error;

/// Errors raised by the numerical engine.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("pole hit at z = {at}, nearest root {nearest}")]
    Pole { at: Complex64, nearest: Complex64 },

    #[error("evaluation on the branch cut (distance {distance:.3e})")]
    Cut { distance: f64 },

    #[error("branch violation: {0}")]
    Branch(String),

    #[error("quadrature did not converge: estimate {estimate:.3e} above target {target:.3e}")]
    Accuracy { estimate: f64, target: f64 },

    #[error("ill-conditioned basis (condition number {0:.3e})")]
    Conditioning(f64),

    #[error("size error: {0}")]
    Size(String),

    #[error("singular configuration: {0}")]
    Singular(String),

    #[error("construction error: {0}")]
    Construction(String),

    #[error("config error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
