use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: String },

    #[error("operator B2 is not relatively bounded by A1 on this grid ({0})")]
    NotRelativelyBounded(String),

    #[error("singular tridiagonal system (pivot {pivot:e} at row {row})")]
    SingularSystem { row: usize, pivot: f64 },

    #[error("Newton iteration did not converge after {iters} iterations (residual {residual:e}, target {target:e})")]
    NewtonDiverged {
        iters: usize,
        residual: f64,
        target: f64,
    },

    #[error("resolvent solve of s + lambda*beta(s) = {r} failed to converge")]
    YosidaNonConvergence { r: f64 },

    #[error("exact modal solution requires a linear problem: {0}")]
    NonlinearProblem(String),

    #[error("Lyapunov check requires pi == 0 (source terms present)")]
    SourceTermsPresent,

    #[error("time grid: T / h = {ratio} is not a positive integer")]
    TimeGrid { ratio: f64 },

    #[error("reference does not cover the requested comparison: {0}")]
    ReferenceMismatch(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}
