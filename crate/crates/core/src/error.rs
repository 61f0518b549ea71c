//! Error types shared across the engines.

use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CoreError {
    #[error("invalid model spec: {0}")]
    InvalidSpec(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("B = 0: no field, the bound-state family degenerates")]
    NoField,

    #[error("degenerate drift: {0}")]
    DegenerateDrift(String),

    #[error("grid coverage: {0}")]
    GridCoverage(String),

    #[error("zero vector")]
    ZeroVector,

    /// QR iteration gave up; `partial` holds the eigenvalues deflated so far.
    #[error("eigensolver did not converge after {sweeps} QR sweeps ({found} of {n} eigenvalues deflated)")]
    EigNonConvergence {
        sweeps: usize,
        found: usize,
        n: usize,
        partial: Vec<Complex64>,
    },

    #[error("near-resonant solve at omega = {omega}: pivot {pivot:.3e} below {threshold:.3e}")]
    Resonance {
        omega: f64,
        pivot: f64,
        threshold: f64,
    },

    #[error("singular system: pivot {pivot:.3e} below {threshold:.3e}")]
    Singular { pivot: f64, threshold: f64 },

    #[error("time step {dt} exceeds stability bound {bound:.4} = 0.4 / gershgorin")]
    StepSize { dt: f64, bound: f64 },

    #[error("divergent evolution: non-finite field at t = {t}")]
    Divergence { t: f64 },

    #[error("insufficient interior states: {found} found, {needed} needed")]
    InsufficientStates { found: usize, needed: usize },

    #[error("empty dataset: {0}")]
    EmptyData(String),

    #[error("unknown parameter key `{0}`")]
    UnknownKey(String),

    #[error("invalid parameter value for `{key}`: {message}")]
    InvalidValue { key: String, message: String },

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, CoreError>;
