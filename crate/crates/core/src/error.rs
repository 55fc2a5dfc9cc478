use alloc::string::String;

/// Errors produced by the core numerical routines.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("matrix is not symmetric (entry ({row}, {col}) defect {defect:e})")]
    NotSymmetric { row: usize, col: usize, defect: f64 },

    #[error("matrix is not positive definite ({0})")]
    NotPositiveDefinite(String),

    #[error("matrix is not positive semi-definite (eigenvalue {0:e})")]
    NotSemiDefinite(f64),

    #[error("coarse basis is rank deficient: Z^T A Z failed to factor ({0})")]
    RankDefect(String),

    #[error("unknown subdomain {index} (decomposition has {count})")]
    UnknownSubdomain { index: usize, count: usize },

    #[error("projector `{0}` is not available for this subdomain")]
    ProjectorUnavailable(&'static str),

    #[error("vector lies outside W_i,gamma: relative B-orthogonality defect {defect:e}")]
    OutsideComplement { defect: f64 },

    #[error("problem of order {order} exceeds the dense cap {cap}")]
    TooLarge { order: usize, cap: usize },

    #[error("non-finite value encountered at iteration {0}")]
    NonFinite(usize),

    #[error("preconditioner `{name}` is not positive definite: <z, r> = {value:e} at iteration {iteration}")]
    IndefinitePreconditioner {
        name: String,
        value: f64,
        iteration: usize,
    },

    #[error("bound constants computed for {constants} do not match method {method}")]
    MethodMismatch {
        method: &'static str,
        constants: &'static str,
    },
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
