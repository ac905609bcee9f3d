use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: String, got: String },

    #[error("column index {index} out of range for {k} columns")]
    IndexOutOfRange { index: usize, k: usize },

    #[error("invalid neighbor/cluster count k={k} for n={n} samples")]
    InvalidK { k: usize, n: usize },

    #[error("inclusion fraction {0} outside (0, 1]")]
    InvalidFraction(f64),

    #[error("invalid threshold pair: lambda_prime={lambda_prime} must exceed lambda={lambda}")]
    InvalidLambdaPair { lambda: f64, lambda_prime: f64 },

    #[error("matrix is not symmetric at ({0}, {1})")]
    NotSymmetric(usize, usize),

    #[error("negative entry {value} at ({row}, {col})")]
    NegativeEntry { row: usize, col: usize, value: f64 },

    #[error("nonzero diagonal entry {value} at index {index}")]
    NonzeroDiagonal { index: usize, value: f64 },

    #[error("non-finite entry at ({0}, {1})")]
    NonFinite(usize, usize),

    #[error("label vectors have different lengths: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T> = std::result::Result<T, Error>;
