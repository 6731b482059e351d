use thiserror::Error;

pub type Result<T> = std::result::Result<T, FidentError>;

/// Errors raised while building or analysing a factor model.
///
/// Row and column fields are 0-based; messages print them 1-based.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum FidentError {
    #[error("invalid cell at row {}, column {}: {reason}", .row + 1, .col + 1)]
    InvalidCell {
        row: usize,
        col: usize,
        reason: String,
    },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("regularity assumption violated: {0}")]
    Regularity(String),

    #[error("phi is not symmetric (max asymmetry {0:.3e})")]
    Asymmetric(f64),

    #[error("phi is not positive definite (smallest eigenvalue {0:.3e})")]
    NotPositiveDefinite(f64),

    #[error("rotation matrix is singular")]
    SingularRotation,

    #[error("non-positive rescaling factor {value} at row {}", .row + 1)]
    NonPositiveScale { row: usize, value: f64 },

    #[error("loadings do not realize the pattern at row {}, column {}: {reason}", .row + 1, .col + 1)]
    PatternViolation {
        row: usize,
        col: usize,
        reason: String,
    },

    #[error("truncation infeasible at row {}, column {}: no sign of the column satisfies it", .row + 1, .col + 1)]
    TruncationInfeasible { row: usize, col: usize },

    #[error("degenerate truncation at row {}, column {}: loading is zero within tolerance", .row + 1, .col + 1)]
    DegenerateTruncation { row: usize, col: usize },

    #[error("pattern fails condition C4: column {} has no truncated cell", .0 + 1)]
    MissingTruncation(usize),

    #[error(
        "m = {0} is too large to enumerate 2^m sign flips; use the structural analysis instead"
    )]
    TooManyFactors(usize),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("input matrix is not symmetric positive definite: {0}")]
    InvalidInput(String),
}
