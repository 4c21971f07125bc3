use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix dimension {dim} exceeds cap {cap} (dense storage needs about {mib} MiB); raise the cap to opt in")]
    DimensionCap { dim: usize, cap: usize, mib: u64 },

    #[error("full-space oracle limited to N <= {cap}, got N = {n}")]
    OracleCap { n: usize, cap: usize },

    #[error("eigensolver did not converge")]
    NoConvergence,

    #[error("eigenpair {index} failed certification: residual {residual:e} > bound {bound:e}")]
    Uncertified { index: usize, residual: f64, bound: f64 },

    #[error("matrix is not symmetric: max |M - M^T| = {0:e}")]
    NotSymmetric(f64),

    #[error("non-finite entry at ({0}, {1})")]
    NonFinite(usize, usize),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("singularity: {0}")]
    Singular(String),

    #[error("index {index} out of range (len {len})")]
    OutOfRange { index: usize, len: usize },

    #[error("empty input: {0}")]
    Empty(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
