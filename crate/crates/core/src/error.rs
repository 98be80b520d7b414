//! Crate-wide error type.

/// Errors produced by solvers, simulators, and bound computations.
#[derive(Debug, Clone, thiserror::Error)]
pub enum Error {
    /// A constructor or operation received a parameter outside its
    /// admissible set (non-finite, wrong sign, zero volatility, ...).
    #[error("invalid parameter `{name}`: {message}")]
    InvalidParameter { name: &'static str, message: String },

    /// The argument lies outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The argument is inside the domain but outside the supported working
    /// range of the numerical kernel.
    #[error("outside supported range: {0}")]
    Range(String),

    /// The operation applies to the other parameter regime.
    #[error("wrong regime: {0}")]
    Regime(String),

    /// A root search, quadrature, or iteration failed to converge.
    #[error("numeric failure: {0}")]
    Numeric(String),

    /// The model has no closed-form solution (general dynamics or prices).
    #[error("no analytic solution: {0}")]
    NoAnalyticSolution(String),

    /// Monte Carlo estimation could not produce a usable estimate.
    #[error("estimation failed: {0}")]
    Estimation(String),

    /// The requested bound does not exist for these parameters.
    #[error("bound unavailable: {0}")]
    BoundUnavailable(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(name: &'static str, message: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            message: message.into(),
        }
    }
}
