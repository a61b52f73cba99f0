use thiserror::Error;

/// Errors produced anywhere in the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not positive definite: {0}")]
    NotPositiveDefinite(String),

    #[error("{what} did not converge: error estimate {error:e} after {evaluations} evaluations")]
    NonConvergence {
        what: &'static str,
        error: f64,
        evaluations: usize,
    },

    #[error("domain error: {0}")]
    DomainError(String),

    #[error("empty sample")]
    EmptySample,

    #[error("function is not a density on the support: mass {mass}")]
    NotADensity { mass: f64 },

    #[error("moment sequence is not positive definite (Hankel matrix fails at order {order})")]
    MomentMatrixNotPD { order: usize },

    #[error("grid too coarse: mass deficit {deficit:e}")]
    GridTooCoarse { deficit: f64 },

    #[error("joint density underflow at ({t}, {u})")]
    DensityUnderflow { t: f64, u: f64 },

    #[error("boundary condition violated: {0}")]
    BoundaryConditionViolated(String),

    #[error("degenerate data: {0}")]
    DegenerateData(String),

    #[error("no solution: {0}")]
    NoSolution(String),

    #[error("parse error at row {row}, column {column}: {message}")]
    Parse {
        row: usize,
        column: String,
        message: String,
    },

    #[error("no usable columns left after cleaning {0}")]
    EmptyAfterCleaning(String),

    #[error("invalid input: {0}")]
    Invalid(#[from] crate::types::Violation),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for failures of a numerical method rather than of the input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NotPositiveDefinite(_)
                | Error::NonConvergence { .. }
                | Error::MomentMatrixNotPD { .. }
                | Error::GridTooCoarse { .. }
                | Error::DensityUnderflow { .. }
                | Error::BoundaryConditionViolated(_)
                | Error::NoSolution(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
