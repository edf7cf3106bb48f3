use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{path}:{line}: {message}")]
    Parse { path: PathBuf, line: usize, message: String },

    #[error("vertex index out of range: triangle {triangle} references vertex {index}, mesh has {count} vertices")]
    VertexOutOfRange { triangle: usize, index: usize, count: usize },

    #[error("zero-area triangle {triangle}")]
    DegenerateTriangle { triangle: usize },

    #[error("non-conforming mesh: edge ({a}, {b}) is shared by {count} triangles")]
    NonManifoldEdge { a: usize, b: usize, count: usize },

    #[error("point ({x}, {y}) is outside {what}")]
    PointOutside { x: f64, y: f64, what: String },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is not positive definite: non-positive pivot at row {pivot}")]
    NotPositiveDefinite { pivot: usize },

    #[error("inf-sup failure: singular Schur complement ({0})")]
    InfSupFailure(String),

    #[error("eigensolver did not converge after {iterations} iterations (worst residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("patch compatibility violated at vertex {vertex}: closure residual {residual:.3e}")]
    PatchCompatibility { vertex: usize, residual: f64 },

    #[error("u_h is not a discrete Poisson solution for the given P0 load (residual {residual:.3e})")]
    NotDiscretePoisson { residual: f64 },

    #[error("linear solver failure: {0}")]
    Solver(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
