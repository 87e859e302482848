use thiserror::Error;

/// Every failure the library can report.
///
/// Variants are grouped by the CLI exit code they map to, see [`QsdError::exit_code`].
#[derive(Debug, Error, Clone, PartialEq)]
pub enum QsdError {
    // model errors
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("negative rate {value} at ({row}, {col})")]
    NegativeRate { row: usize, col: usize, value: f64 },
    #[error("negative entry {value} at ({row}, {col})")]
    NegativeEntry { row: usize, col: usize, value: f64 },
    #[error("row {row} of (Q | a) sums to {sum}, expected 1")]
    RowSumViolation { row: usize, sum: f64 },
    #[error("schema error at line {line}, field `{field}`: {message}")]
    Schema { line: usize, field: String, message: String },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("size guard: {0}")]
    SizeGuard(String),

    // solver errors
    #[error("generator is not irreducible")]
    NotIrreducible,
    #[error("Perron eigenvector is not strictly positive: {0}")]
    PerronFailure(String),
    #[error("eigensolver did not converge: {0}")]
    SolverDivergence(String),
    #[error("Perron data does not match the chain (residual {0:e})")]
    PerronMismatch(f64),
    #[error("transformed kernel is not stochastic (row {row} sums to {sum})")]
    NonStochastic { row: usize, sum: f64 },
    #[error("generator is not symmetric with respect to the given measure (defect {0:e})")]
    NotSymmetric(f64),
    #[error("chain is not reversible (defect {0:e})")]
    NotReversible(f64),
    #[error("state {0} has no path to the absorbing point")]
    NoPathToAbsorption(String),
    #[error("negative time {0}")]
    NegativeTime(f64),
    #[error("discrete chains only accept integer times, got {0}")]
    FractionalTime(f64),
    #[error("surviving mass underflowed at t = {0}")]
    TotalMassUnderflow(f64),
    #[error("reference measure vanishes at state {0}")]
    ReferenceZero(usize),
    #[error("certification failed: {0}")]
    CertificationFailure(String),
    #[error("boundary equation defect {0:e}")]
    BoundaryDefect(f64),

    // statistics
    #[error("too few survivors: expected {expected:.1}, need at least {required}")]
    TooFewSurvivors { expected: f64, required: usize },
}

impl QsdError {
    /// CLI exit code: 2 model, 3 solver, 4 statistics.
    pub fn exit_code(&self) -> i32 {
        use QsdError::*;
        match self {
            DimensionMismatch(_)
            | NegativeRate { .. }
            | NegativeEntry { .. }
            | RowSumViolation { .. }
            | Schema { .. }
            | InvalidParameter(_)
            | SizeGuard(_) => 2,
            TooFewSurvivors { .. } => 4,
            _ => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, QsdError>;
