use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    /// The requested parameters lie outside the range where the
    /// determinant can be evaluated reliably in the available precision.
    #[error("unreliable regime: {0}")]
    Reliability(String),

    #[error("{what} did not converge: achieved {achieved:e}, target {target:e}")]
    Convergence { what: String, achieved: f64, target: f64 },

    #[error("non-finite kernel value at ({x}, {y})")]
    NonFinite { x: f64, y: f64 },

    #[error("non-finite sample at interpolation node {node}")]
    Fit { node: f64 },

    #[error("support error: {0}")]
    Support(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
