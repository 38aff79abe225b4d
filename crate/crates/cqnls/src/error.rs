use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("quadrature failed to converge: {0}")]
    QuadratureFailure(String),

    #[error("weight construction failed: {0}")]
    WeightConstruction(String),

    #[error("state is not near the ground-state orbit (delta = {delta:.6e}, gate = {gate:.6e})")]
    NotNearOrbit { delta: f64, gate: f64 },

    #[error("field is identically zero")]
    ZeroField,

    #[error("no admissible amplitude on the requested side; positive roots (a^2, grad ratio): {roots:?}")]
    InfeasibleTuning { roots: Vec<(f64, f64)> },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("{failed} of {total} sweep runs failed")]
    PartialSweep { failed: usize, total: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
