use thiserror::Error;

/// Errors raised by the pricing, asymptotic and simulation routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An input lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A model parameter failed validation.
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: String },

    /// A price lies outside the static-arbitrage band, so no implied volatility exists.
    #[error("no implied volatility: {0}")]
    NoSolution(String),

    /// A price sits exactly on an edge of the arbitrage band.
    #[error("price on arbitrage boundary: {0}")]
    Boundary(String),

    /// Evaluation point too close to a pole of the moment generating function.
    #[error("evaluation point within {distance:e} of the pole at {pole}")]
    PoleProximity { pole: f64, distance: f64 },

    /// An exponent exceeded the representable range of `f64`.
    #[error("exponent {exponent} overflows f64")]
    Overflow { exponent: f64 },

    /// An iterative method stopped before meeting its tolerance.
    #[error("no convergence: {0}")]
    Convergence(String),

    /// A grid evaluation failed at a particular strike.
    #[error("at k = {k}: {source}")]
    AtStrike { k: f64, source: Box<Error> },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

pub(crate) fn ensure_finite(name: &str, x: f64) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(domain(format!("{name} must be finite, got {x}")))
    }
}
