//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("invalid dimension {0}")]
    InvalidDimension(usize),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("matrix is not Hermitian (deviation {deviation:.3e} exceeds {tol:.3e})")]
    NotHermitian { deviation: f64, tol: f64 },

    #[error("operator family is not linearly independent (smallest Gram singular value {min_sv:.3e})")]
    LinearlyDependent { min_sv: f64 },

    #[error(
        "restriction to the projector range is singular \
         (smallest singular value {min_sv:.3e}, tolerance {tol:.3e})"
    )]
    SingularOnRange { min_sv: f64, tol: f64 },

    #[error("restricted inverse condition number {cond:.3e} exceeds cap {cap:.3e}")]
    IllConditioned { cond: f64, cap: f64 },

    #[error("operator is not a projector (idempotency defect {defect:.3e})")]
    NotAProjector { defect: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("generator evaluation overflowed at t = {t:.6e} (norm {norm:.3e})")]
    ExponentialOverflow { t: f64, norm: f64 },

    #[error("Newton iteration failed to converge after {iters} iterations (residual {residual:.3e})")]
    NonConvergence { iters: usize, residual: f64 },

    #[error("mean values left the ansatz domain at t = {t:.9e}")]
    DomainExit { t: f64 },

    #[error("requested mean values lie outside the ansatz domain")]
    DomainViolation,

    #[error("ansatz matrix lost positive semidefiniteness (smallest eigenvalue {min_eig:.3e})")]
    PositivityViolation { min_eig: f64 },

    #[error("biorthogonality violated (worst deviation {deviation:.3e})")]
    BiorthogonalityViolation { deviation: f64 },

    #[error("step size underflow at t = {t:.9e} (h = {h:.3e})")]
    StepUnderflow { t: f64, h: f64 },

    #[error("step limit {max_steps} exceeded at t = {t:.9e}")]
    MaxStepsExceeded { t: f64, max_steps: usize },

    #[error("non-finite value encountered at t = {t:.9e}")]
    NonFinite { t: f64 },

    #[error("slope fit needs at least {need} points, got {got}")]
    TooFewPoints { need: usize, got: usize },

    #[error("slope fit rejected: R^2 = {r2:.6} below {min_r2:.6}")]
    PoorFit { r2: f64, min_r2: f64 },

    #[error("feature map: {0}")]
    FeatureMap(String),

    #[error("{0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
