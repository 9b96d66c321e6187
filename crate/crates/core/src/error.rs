use nalgebra::DVector;
use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("mass matrix is not positive definite (element {element})")]
    IndefiniteMass { element: usize },

    #[error("non-finite output from element {element}")]
    NonFinite { element: usize },

    #[error("singular matrix in {context} (pivot {pivot} = {value:e})")]
    Singular {
        context: &'static str,
        pivot: usize,
        value: f64,
    },

    #[error("eigensolver did not converge after {iterations} iterations (residual {residual:e})")]
    EigenNonConvergence { iterations: usize, residual: f64 },

    #[error("requested {requested} modes but only {available} are available")]
    TooManyModes { requested: usize, available: usize },

    #[error("snapshot matrix has rank {rank}, fewer than the {required} requested modes")]
    RankDeficient { rank: usize, required: usize },

    #[error("tangent basis is rank deficient (condition estimate {condition:e})")]
    IllConditioned { condition: f64 },

    #[error("manifold coordinate recovery stopped after {iterations} iterations (relative residual {residual:e})")]
    RecoveryFailed {
        iterations: usize,
        residual: f64,
        best: DVector<f64>,
    },

    #[error("sparse NNLS stalled with relative residual {residual:e}")]
    NnlsStall { residual: f64 },

    #[error("reduced mesh is empty; the model has not been trained")]
    EmptyReducedMesh,

    #[error("Newton iterations diverged at step {step} (residual {residual:e})")]
    NewtonDivergence { step: usize, residual: f64 },

    #[error("reference trajectory is identically zero")]
    ZeroReference,

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
