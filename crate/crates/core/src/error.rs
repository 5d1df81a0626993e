use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("matrix is numerically singular (condition estimate {0:e})")]
    Singular(f64),

    #[error("state space of {size} states exceeds the oracle cap of {cap}")]
    StateSpaceTooLarge { size: u128, cap: usize },

    #[error("symbol {value} is farther than d_min from every alphabet point")]
    OffConstellation { value: f64 },

    #[error("kernel leading eigenvalue {0} differs from 1")]
    BrokenKernel(f64),
}

pub type Result<T> = std::result::Result<T, Error>;
