use thiserror::Error;

/// Errors raised by the simulator library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimension {dim}: every Fock space needs at least 2 levels")]
    InvalidDimension { dim: usize },

    #[error("dimension mismatch: expected {expected:?}, found {found:?}")]
    DimensionMismatch { expected: Vec<usize>, found: Vec<usize> },

    #[error("invalid subsystem selection {keep:?} for {count} subsystems")]
    InvalidSubsystem { keep: Vec<usize>, count: usize },

    #[error("matrix contains non-finite entries")]
    NonFinite,

    #[error("operator is not hermitian (defect {defect:.3e} > {tolerance:.3e})")]
    NotHermitian { defect: f64, tolerance: f64 },

    #[error("trace {trace:.15} deviates from 1 by more than {tolerance:.3e}")]
    TraceViolation { trace: f64, tolerance: f64 },

    #[error("minimum eigenvalue {min_eigenvalue:.3e} below -{tolerance:.3e}")]
    NotPositive { min_eigenvalue: f64, tolerance: f64 },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("frequency {omega} lies outside the spectral support [{lower}, {upper}]")]
    OutsideSupport { omega: f64, lower: f64, upper: f64 },

    #[error("stability gate violated: dt*|G| = {product:.3e} >= {limit}; try dt <= {suggested_dt:.3e}")]
    StabilityGate {
        dt: f64,
        product: f64,
        limit: f64,
        suggested_dt: f64,
    },

    #[error("full Hilbert space dimension {dim} exceeds cap {cap}")]
    DimensionCap { dim: usize, cap: usize },

    #[error("matrix is singular: {0}")]
    Singular(String),

    #[error("linear algebra failure: {0}")]
    Linalg(#[from] ndarray_linalg::error::LinalgError),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
