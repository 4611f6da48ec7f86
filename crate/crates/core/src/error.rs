use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error(
        "matrix is not symmetric: entry ({row}, {col}) differs from its transpose by {diff:e}"
    )]
    NotSymmetric { row: usize, col: usize, diff: f64 },

    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("non-finite value at {location}")]
    NonFinite { location: String },

    #[error(
        "split index {split} out of range for a {size}x{size} matrix (need 1 <= split < size)"
    )]
    SplitOutOfRange { split: usize, size: usize },

    #[error("requested {requested} events but only {available} are available")]
    HorizonExceeded { requested: usize, available: usize },

    #[error("start index {start} out of range 1..={end}")]
    StartOutOfRange { start: usize, end: usize },

    #[error("weight sequence has {len} entries but {needed} are required")]
    WeightsTooShort { len: usize, needed: usize },

    #[error("event {index} has zero probability")]
    ZeroProbability { index: usize },

    #[error("weight {index} is negative ({value})")]
    NegativeWeight { index: usize, value: f64 },

    #[error("ratio undefined at n = {n}: denominator {denominator:e} is below the guard")]
    UndefinedRatio { n: usize, denominator: f64 },

    #[error("degenerate Gram data: {0}")]
    Degenerate(String),

    #[error("invalid Gram data: {0}")]
    InvalidGram(String),

    #[error("invalid model at {path}: {message}")]
    InvalidModel { path: String, message: String },

    #[error("model size guard: {0}")]
    SizeGuard(String),

    #[error("parse error at {path}: {message}")]
    Parse { path: String, message: String },

    #[error("{0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
