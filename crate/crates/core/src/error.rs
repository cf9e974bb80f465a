use thiserror::Error;

use crate::lp::LpStatus;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An input violated an operation's precondition.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The linear program did not reach an optimal vertex.
    #[error("linear program {0}")]
    Lp(LpStatus),

    /// The requested hedge structure is not available for the given quotes.
    #[error("unsupported structure: {0}")]
    Unsupported(String),

    /// A recovery specification without a density (e.g. a two-point law) was
    /// used where a density is required.
    #[error("recovery law has no density: {0}")]
    NoDensity(&'static str),

    /// A quoted price lies outside the potentially acceptable range, where
    /// the expected return on capital at risk is negative.
    #[error("price {price} outside the acceptable range [{u_min}, {u_max}]")]
    PriceOutOfRange { price: f64, u_min: f64, u_max: f64 },
}

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}
