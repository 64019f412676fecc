use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("non-finite value at row {row}, column {col}")]
    NonFiniteInput { row: usize, col: usize },

    #[error("invalid feature matrix: {0}")]
    InvalidShape(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("representation is degenerate: {0}")]
    DegenerateRepresentation(String),

    #[error("gram matrix is already centered ({0})")]
    AlreadyCentered(String),

    #[error("dimension mismatch: {left} vs {right} examples")]
    DimensionMismatch { left: usize, right: usize },

    #[error("centering mismatch: {left} vs {right}")]
    CenteringMismatch { left: String, right: String },

    #[error("self-similarity vanishes after centering (constant representation)")]
    ZeroSelfSimilarity,

    #[error("linear CKA is {0:e}; relative difference is undefined")]
    ZeroLinearCka(f64),

    #[error("need {needed} finite curve points for a tail fit, found {found}")]
    InsufficientTail { needed: usize, found: usize },

    #[error("empty input")]
    EmptyInput,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

impl Error {
    /// Errors caused by the geometry of otherwise well-formed data.
    pub fn is_numerical_degeneracy(&self) -> bool {
        matches!(
            self,
            Error::DegenerateRepresentation(_)
                | Error::ZeroSelfSimilarity
                | Error::ZeroLinearCka(_)
                | Error::InsufficientTail { .. }
        )
    }
}
