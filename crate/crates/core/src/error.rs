use thiserror::Error;

/// Errors raised by evaluations and checks.
///
/// Variants that carry a point report where the failure happened so callers
/// can reproduce it from a report row.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("point {point:?} is outside the domain")]
    OutOfDomain { point: Vec<f64> },

    #[error("Hessian is not positive definite at {point:?} (min eigenvalue {min_eigenvalue:e})")]
    NotConvexHere { point: Vec<f64>, min_eigenvalue: f64 },

    #[error("finite-difference stencil around {point:?} leaves the domain")]
    StencilOutOfDomain { point: Vec<f64> },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid specification: {0}")]
    InvalidSpec(String),

    #[error("equivalence violated at {point:?}: {detail}")]
    EquivalenceViolation { point: Vec<f64>, detail: String },

    #[error("eigenvalues collide at {point:?}; slope is undefined on the umbilic stratum")]
    BasePointHit { point: Vec<f64> },

    #[error("matrix is singular (condition number {condition:e})")]
    Singular { condition: f64 },

    #[error("matrix does not have orthogonal columns (off-diagonal defect {defect:e})")]
    NotOrthogonalColumns { defect: f64 },

    #[error("stratum signatures disagree: {left:?} vs {right:?}")]
    SignatureMismatch { left: Vec<usize>, right: Vec<usize> },

    #[error("curve leaves the domain at t = {t}")]
    CurveLeavesDomain { t: f64 },

    #[error("integrator step-halving difference {difference:e} exceeds tolerance {tolerance:e}")]
    IntegratorToleranceExceeded { difference: f64, tolerance: f64 },

    #[error("frame is not orthonormal for the Hessian (defect {defect:e})")]
    NotOrthonormalFrame { defect: f64 },

    #[error("frame is not in the orthogonal-column set (defect {defect:e})")]
    NotInC { defect: f64 },

    #[error("Newton iteration did not converge (residual {residual:e}, last iterate {last:?})")]
    NoConvergence { residual: f64, last: Vec<f64> },

    #[error("convexity certificate failed for handle {handle}: min second derivative {min_second:e}")]
    ConvexityCertificateFailed { handle: usize, min_second: f64 },

    #[error("regions overlap: {0}")]
    RegionOverlap(String),

    #[error("stratum {signature:?} at {point:?} is outside the permitted set")]
    UnexpectedStratum { point: Vec<f64>, signature: Vec<usize> },
}

pub type Result<T> = std::result::Result<T, Error>;
