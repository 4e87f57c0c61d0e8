use thiserror::Error;

#[derive(Debug, Error)]
pub enum LabError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("non-finite input in {0}")]
    NonFinite(&'static str),

    #[error("invalid convex body: {0}")]
    InvalidBody(String),

    #[error("invalid cone: {0}")]
    InvalidCone(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("parameter out of range: {0}")]
    Domain(String),

    #[error(
        "step {step} is not a multiple of the grid spacing {spacing} on axis {axis}; \
         admissible steps are k*{spacing} for k = 1..={max_k}"
    )]
    NonCommensurate {
        axis: usize,
        step: f64,
        spacing: f64,
        max_k: usize,
    },

    #[error("stencil at {0:?} leaves the sampled region")]
    StencilOutsideGrid(Vec<f64>),

    #[error("density is not compactly supported inside the grid: {0}")]
    Support(String),

    #[error("bracketing failed: {0}")]
    Bracket(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, LabError>;

pub(crate) fn check_finite(x: &[f64], what: &'static str) -> Result<()> {
    if x.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(LabError::NonFinite(what))
    }
}

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(LabError::DimensionMismatch { expected, got })
    }
}
