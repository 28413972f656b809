use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid exponent: {0}")]
    InvalidExponent(String),

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("non-finite value at cell {cell}")]
    NonFinite { cell: usize },

    #[error("boundary value {value:e} at cell {cell} violates the homogeneous Dirichlet condition")]
    BoundaryViolation { cell: usize, value: f64 },

    #[error("could not bracket the Luxemburg norm root")]
    Bracketing,

    #[error("minimizer did not converge after {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("step {step}: {source}")]
    Step {
        step: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
