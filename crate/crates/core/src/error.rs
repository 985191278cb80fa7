use thiserror::Error;

/// Errors raised by grid construction, the operator algebra and frame computations.
#[derive(Debug, Error)]
pub enum GaborError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid lattice: {0}")]
    InvalidLattice(String),
    #[error("invalid weight: {0}")]
    InvalidWeight(String),
    #[error("non-finite sample at index {0}")]
    NonFinite(usize),
    #[error("expected {expected} samples, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("window is identically zero")]
    ZeroWindow,
    #[error("shift {0} is not an integer multiple of the grid step")]
    NonCommensurateShift(f64),
    #[error("frequency {0} is not an integer multiple of 1/L")]
    NonCommensurateFrequency(f64),
    #[error("operands live on different grids")]
    GridMismatch,
    #[error("coefficient array does not match the lattice")]
    LatticeMismatch,
    #[error("offset {0} is not tabulated")]
    OutOfTable(f64),
    #[error("value {value} outside admissible range (limit {limit})")]
    OutOfRange { value: f64, limit: f64 },
    #[error("grid of {0} samples is too large for a dense matrix")]
    GridTooLarge(usize),
    #[error("unsupported exponent {0}")]
    UnsupportedExponent(f64),
    #[error("operator is not self-adjoint (defect {0:e})")]
    NotSelfAdjoint(f64),
    #[error("operator is singular (lower bound {lower:e}, upper bound {upper:e})")]
    SingularOperator { lower: f64, upper: f64 },
    #[error("system is not a frame (A = {lower:e}, B = {upper:e})")]
    NotAFrame { lower: f64, upper: f64 },
    #[error("did not converge after {iterations} iterations (last residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },
    #[error("inverse failed the identity check (residual {residual:e} > {tol:e})")]
    IdentityCheckFailed { residual: f64, tol: f64 },
    #[error("index set mismatch: {0}")]
    IndexMismatch(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, GaborError>;
