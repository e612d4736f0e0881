use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum NetsymError {
    #[error("invalid network spec: {0}")]
    InvalidSpec(String),

    #[error("not a monoid: {0}")]
    NotAMonoid(String),

    #[error("enumeration bound exceeded: requested {requested}, bound {bound}")]
    BoundExceeded { requested: usize, bound: usize },

    #[error("syntax error at {line}:{col}: {msg}")]
    SyntaxError { line: usize, col: usize, msg: String },

    #[error("unknown variable `{0}`")]
    UnknownVariable(String),

    #[error("non-finite value during evaluation: {0}")]
    NonFinite(String),

    #[error("failed to split representation: {0}")]
    SplitFailure(String),

    #[error("summand is not indecomposable: {0}")]
    NotIndecomposable(String),

    #[error("{0}")]
    HypothesisViolated(String),

    #[error("eigenvalue clustering is ambiguous: {0}")]
    IllConditioned(String),

    #[error("point is not an equilibrium (residual {0:e})")]
    NotEquilibrium(f64),

    #[error("point is not fixed by all symmetries (residual {0:e})")]
    NotSymmetricPoint(f64),

    #[error("Newton iteration diverged: {0}")]
    NewtonDivergence(String),

    #[error("continuation failed to converge: {0}")]
    NoConvergence(String),

    #[error("continuation step size underflow (min step {0:e})")]
    StepUnderflow(f64),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, NetsymError>;
