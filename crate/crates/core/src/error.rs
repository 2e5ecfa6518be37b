use thiserror::Error;

/// Errors raised by the library. Numerical inconclusiveness is not an error:
/// the solver reports it through `Verdict::Unknown` instead.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("contract violated: {0}")]
    Contract(String),

    #[error("numerical failure: {0}")]
    Numeric(String),

    #[error("size limit exceeded: {what} is {got}, limit {limit}")]
    Size {
        what: &'static str,
        got: usize,
        limit: usize,
    },

    #[error("class precondition violated: {0}")]
    Class(String),

    #[error("invalid input: {0}")]
    Input(String),
}

pub type Result<T> = std::result::Result<T, Error>;
