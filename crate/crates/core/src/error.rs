use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("spin index {index} appears more than once")]
    RepeatedIndex { index: usize },

    #[error("spin index {index} is outside 1..={n_spins}")]
    IndexOutOfRange { index: usize, n_spins: usize },

    #[error("pair position {position} does not exist in a multi-index with {len} pairs")]
    InvalidPosition { position: usize, len: usize },

    #[error("dense realization needs N = {n_spins} but the dense limit is {limit}")]
    DenseLimitExceeded { n_spins: usize, limit: usize },

    #[error("the reduced solver does not accept magnetic fields (site {site} has a nonzero field)")]
    FieldsNotSupported { site: usize },

    #[error("S = {spin} is not on the total-spin ladder of {n_spins} spins")]
    InvalidSpin { spin: f64, n_spins: usize },

    #[error("invalid spin system: {0}")]
    InvalidSystem(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("numerical failure: {0}")]
    Numerical(String),
}
