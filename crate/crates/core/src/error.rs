use thiserror::Error;

/// Failure modes shared by every numerical routine in the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("unsupported operation: {0}")]
    Unsupported(String),
    #[error("accuracy not reached: {message} (partial {partial}, error {abs_error})")]
    Accuracy {
        message: String,
        partial: f64,
        abs_error: f64,
    },
    #[error("integrand returned NaN at {point:?}")]
    Evaluation { point: Vec<f64> },
    #[error("divergent: {0}")]
    Divergent(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("out of range: {0}")]
    Range(String),
    #[error("no feasible point: {0}")]
    NoFeasiblePoint(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
