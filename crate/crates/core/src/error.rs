use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("{name} must be positive, got {value}")]
    NonPositive { name: &'static str, value: f64 },

    #[error("invalid parameter {name} = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("operator is not monotone: smallest eigenvalue of the symmetric part is {min_eigenvalue}")]
    NotMonotone { min_eigenvalue: f64 },

    #[error("matrix {name} is not positive definite (smallest eigenvalue {min_eigenvalue})")]
    NotPositiveDefinite { name: &'static str, min_eigenvalue: f64 },

    #[error("matrix {name} is rank deficient (smallest eigenvalue of the Gram matrix {min_eigenvalue})")]
    RankDeficient { name: &'static str, min_eigenvalue: f64 },

    #[error("linear solve failed: {0}")]
    LinearSolve(&'static str),

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("unsupported parameter {name} = {value}: {reason}")]
    Unsupported {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("inexactness criterion violated at iteration {k}: error {error} > delta * step {bound}")]
    CriterionViolated { k: usize, error: f64, bound: f64 },

    #[error("representation identity violated: |y - T(x)| = {gap}")]
    RepresentationMismatch { gap: f64 },

    #[error("subproblem optimality check failed: residual {residual}")]
    Optimality { residual: f64 },

    #[error("too few usable contraction ratios: {found} (need {required})")]
    TooFewRatios { found: usize, required: usize },

    #[error("invalid configuration: {0}")]
    Config(String),
}

impl Error {
    /// Errors that arise from floating-point breakdown rather than bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::LinearSolve(_)
                | Error::NonFinite(_)
                | Error::CriterionViolated { .. }
                | Error::RepresentationMismatch { .. }
                | Error::Optimality { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
