use thiserror::Error;

/// Errors raised by the solver library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum TfwError {
    #[error("invalid unit cell: {0}")]
    InvalidCell(String),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("fields live on different grids")]
    GridMismatch,
    #[error("spectral coefficients are not Hermitian-symmetric (defect {defect:e})")]
    NonHermitianInput { defect: f64 },
    #[error("invalid Lp exponent {0} (must be >= 1)")]
    InvalidExponent(f64),
    #[error("density has negative values (min {min:e}, max {max:e})")]
    NegativeDensity { min: f64, max: f64 },
    #[error("field is not neutral: integral {net:e} exceeds tolerance for L1 mass {mass:e}")]
    NotNeutral { net: f64, mass: f64 },
    #[error("Green function evaluated at a lattice point")]
    SingularPoint,
    #[error("invalid Green function configuration: {0}")]
    InvalidGreenConfig(String),
    #[error("eigensolver stalled after {iterations} iterations (residual {residual:e})")]
    EigensolverStalled { iterations: usize, residual: f64 },
    #[error("SCF diverged at iteration {iterations} (step {residual:e})")]
    ScfDiverged { iterations: usize, residual: f64 },
    #[error("SCF not converged after {iterations} iterations (step {residual:e})")]
    ScfNotConverged { iterations: usize, residual: f64 },
    #[error("invalid SCF configuration: {0}")]
    InvalidScfConfig(String),
    #[error("invalid nuclear model: {0}")]
    InvalidModel(String),
    #[error("model cannot be sampled on this grid: {0}")]
    UnsampleableModel(String),
    #[error("degenerate rate fit: {0}")]
    DegenerateFit(String),
    #[error("invalid homogenization plan: {0}")]
    InvalidPlan(String),
}

pub type Result<T> = std::result::Result<T, TfwError>;
