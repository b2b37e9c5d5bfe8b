use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LabError {
    #[error("dimension n = {0} is not supported (need n >= 5)")]
    Dimension(u32),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("matrix not positive definite (pivot {pivot} = {value:e})")]
    NotPositiveDefinite { pivot: usize, value: f64 },
    #[error("operator form is indefinite: {0}")]
    Indefinite(String),
    #[error("iteration did not converge: {0}")]
    NoConvergence(&'static str),
    #[error("requires positive scalar curvature, got S = {0}")]
    NonPositiveCurvature(f64),
    #[error("density vanishes at every node")]
    DegenerateDensity,
    #[error("field has zero weighted mass")]
    NullMass,
    #[error("eigenvalue gap {gap:e} below tolerance {tol:e}")]
    DegenerateGap { gap: f64, tol: f64 },
    #[error("fields are colinear in the weighted inner product (t = {0})")]
    Colinear(f64),
    #[error("profile under-resolved: {nodes} nodes within 2*eps, need {required_nodes} (try q >= {required_q})")]
    Aliasing {
        nodes: usize,
        required_nodes: usize,
        required_q: usize,
    },
    #[error("radial profile does not decay within R = {radius}: tail fraction {tail:e} (try R >= {required_radius})")]
    InsufficientDecay {
        radius: f64,
        tail: f64,
        required_radius: f64,
    },
}

pub type Result<T> = std::result::Result<T, LabError>;
