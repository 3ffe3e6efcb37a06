use thiserror::Error;

/// Errors produced anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("size mismatch: expected {expected}, got {actual}")]
    SizeMismatch { expected: usize, actual: usize },

    #[error("index {index} out of range 1..={n}")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("strategy has {available} terms, {requested} requested")]
    StrategyTooShort { available: usize, requested: usize },

    #[error("size {n} exceeds the supported maximum of {max}")]
    TooLarge { n: usize, max: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("malformed image: {0}")]
    Image(String),

    #[error("image dimensions {width}x{height} are not divisible by {divisor}")]
    Dimensions {
        width: usize,
        height: usize,
        divisor: usize,
    },

    #[error("decomposition produced no least significant coefficients")]
    EmptyLsc,

    #[error("invalid decomposition: {0}")]
    Decomposition(String),

    #[error("insufficient trials: {trials} given, at least {required} required")]
    InsufficientTrials { trials: usize, required: usize },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
