use thiserror::Error;

/// Error type shared by all core modules.
#[derive(Debug, Error)]
pub enum CoreError {
    #[error("dimension mismatch: {context}")]
    DimensionMismatch { context: String },

    #[error("matrix is not Hermitian (defect {defect:.3e} > {tol:.3e})")]
    NotHermitian { defect: f64, tol: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dense eigensolver failed (info={info}, dim={dim})")]
    Eigensolver { info: i32, dim: usize },

    #[error("no eigenvalue inside the energy window [{lo}, {hi}]")]
    EmptyWindow { lo: f64, hi: f64 },

    #[error("state index {index} lies outside the energy window")]
    IndexOutsideWindow { index: usize },

    #[error("fixed-point iteration did not converge: residual {residual:.3e} after {iterations} iterations")]
    NoConvergence { residual: f64, iterations: usize },

    #[error("spectral parameter must have nonzero imaginary part")]
    RealSpectralParameter,

    #[error("two-body stability denominator too small: |1 - lambda^2 <M1 M2>| = {margin:.3e}")]
    NearSingularDenominator { margin: f64 },

    #[error("quadrature grid too coarse: spacing {spacing:.3e} exceeds eta/2 = {limit:.3e}")]
    GridTooCoarse { spacing: f64, limit: f64 },

    #[error("imaginary residue {residue:.3e} exceeds 1e-8; Hermiticity broken upstream")]
    ImaginaryResidue { residue: f64 },

    #[error("observable kind does not apply to this model: {0}")]
    ObservableModelMismatch(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("bad matrix file: {0}")]
    BadMatrixFile(String),

    #[error("{0}")]
    Other(String),
}

pub type Result<T> = std::result::Result<T, CoreError>;
