use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("unsupported dimension {0}")]
    UnsupportedDimension(usize),

    #[error("operator is not unitary (deviation {0:.3e})")]
    NotUnitary(f64),

    #[error("not a valid density matrix: {0}")]
    InvalidState(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The diagonalizing quadratic has no unit-modulus root for this angle.
    #[error("no unit-modulus diagonalizing root for alpha = {alpha}")]
    NoUnitRoot { alpha: f64 },

    #[error("no solution found up to cap {cap}")]
    NotFound { cap: usize },

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("required sequence length exceeds cap {cap}")]
    SequenceTooLong { cap: usize },
}
