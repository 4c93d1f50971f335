use thiserror::Error;

/// Everything that can go wrong between reading a problem and reporting on it.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("non-finite entry in {0}")]
    NonFinite(&'static str),

    #[error("dimension mismatch in {what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("index ({row}, {col}) out of bounds for {what} of shape {nrows}x{ncols}")]
    IndexOutOfBounds {
        what: &'static str,
        row: usize,
        col: usize,
        nrows: usize,
        ncols: usize,
    },

    #[error("singular matrix: {0}")]
    SingularMatrix(&'static str),

    #[error("declared sparsity s = {declared} does not match measured s = {measured}")]
    SparsityMismatch { declared: usize, measured: usize },

    #[error("no rescale factor achieves R >= |F0| (R = {big_r}, |F0| = {norm_f0})")]
    InfeasibleRescale { big_r: f64, norm_f0: f64 },

    #[error("series diverges: R = {0} >= 1")]
    Divergent(f64),

    #[error("homotopy term nu_{index} overflowed (norm {norm:e})")]
    SeriesOverflow { index: usize, norm: f64 },

    #[error("catalan number {0} exceeds the supported range")]
    CatalanOverflow(usize),

    #[error("embedding dimension overflows for n = {n}, c = {c}")]
    DimensionOverflow { n: usize, c: usize },

    #[error("order c = {0} outside [1, 64]")]
    InvalidOrder(usize),

    #[error("embedding column for level {level} tuple {tuple:?} is missing")]
    MissingColumn { level: usize, tuple: Vec<u32> },

    #[error("term is not part of this layout")]
    UnknownTerm,

    #[error("iterative solver did not converge after {iterations} iterations (best residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("newton iteration did not converge after {iterations} iterations (residual {residual:e})")]
    NewtonNonConvergence { iterations: usize, residual: f64 },

    #[error("singular jacobian at newton iteration {0}")]
    SingularJacobian(usize),

    #[error("hypothesis violated: {0}")]
    HypothesisViolated(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("zero vector: {0}")]
    ZeroVector(&'static str),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
