use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("fitness {fitness} is outside the range [{min}..{max}]")]
    FitnessOutOfRange { fitness: i64, min: i64, max: i64 },

    #[error("mutation rate {0} is outside [0, 1]")]
    InvalidRate(f64),

    #[error("flip count {k} is outside [0..{n}]")]
    InvalidFlipCount { k: usize, n: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("operation not supported for this problem: {0}")]
    Unsupported(String),

    #[error("transition distribution is not normalized (sum = {0})")]
    Unnormalized(f64),

    #[error("invalid rate grid: {0}")]
    InvalidGrid(String),

    #[error("metadata mismatch: {0}")]
    Mismatch(String),

    #[error("invalid config: {0}")]
    Config(String),

    #[error("{path}: {message}")]
    Schema { path: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
