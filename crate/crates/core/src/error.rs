use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A parameter violates its documented range.
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// Lennard-Jones evaluated where `x - x0 + 1 <= 0`.
    #[error("potential evaluated outside its domain at x = {x}")]
    Domain { x: f64 },

    #[error("non-finite value produced at x = {x}: {what}")]
    NonFinite { x: f64, what: &'static str },

    #[error("adaptive quadrature did not converge: estimate {estimate}, residual {residual:e}")]
    Quadrature { estimate: f64, residual: f64 },

    #[error("grid state {state} outside the admissible range {range}")]
    StateOutOfRange { state: u64, range: String },

    #[error("payoff is not finite at grid state {state} (x = {x})")]
    NonFinitePayoff { state: u32, x: f64 },

    /// Boundary data with `p2 = 0` (pure Wentzell/absorbing) is not handled.
    #[error(
        "p2 = 0 is not supported; this case needs an absorbing walk at the origin \
         rather than a sticky one"
    )]
    UnsupportedBoundary,

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("all {censored} samples were censored at horizon {horizon}")]
    Censored { censored: u64, horizon: f64 },

    #[error("trajectory I/O: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

/// Checks `value > 0` and finite.
pub(crate) fn positive(name: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(Error::param(name, format!("must be positive and finite, got {value}")))
    }
}

/// Checks `value >= 0` and finite.
pub(crate) fn non_negative(name: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() && value >= 0.0 {
        Ok(value)
    } else {
        Err(Error::param(name, format!("must be non-negative and finite, got {value}")))
    }
}
