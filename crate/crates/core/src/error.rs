use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("degenerate triangle {triangle} (signed area {area:e})")]
    DegenerateTriangle { triangle: usize, area: f64 },

    #[error("meshes are not nested: {0}")]
    NotNested(String),

    #[error("unsupported quadrature degree {0} (supported: 1..=10)")]
    UnsupportedDegree(usize),

    #[error("problem has no exact solution")]
    NoExactSolution,

    #[error("facet {0} lies on the boundary and has no jump")]
    BoundaryFacet(usize),

    #[error(
        "linear solve failed on mesh with {n_elements} elements, {n_unknowns} unknowns \
         (min h_T = {min_h:e}): {reason}"
    )]
    SolverFailure {
        n_elements: usize,
        n_unknowns: usize,
        min_h: f64,
        reason: String,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
