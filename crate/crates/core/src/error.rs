use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument falls outside the operation's domain.
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// The input object is in the wrong state for the requested operation.
    #[error("invalid state: {0}")]
    State(String),

    /// Observed data violate a structural requirement (e.g. negative counts).
    #[error("invalid data: {0}")]
    Data(String),

    #[error("initialization failed: {0}")]
    Initialization(String),

    #[error("optimization failed after {iterations} iterations: {message}")]
    Optimization { iterations: usize, message: String },

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),

    #[error("malformed input: {0}")]
    Format(String),
}

macro_rules! ensure_param {
    ($cond:expr, $($arg:tt)+) => {
        if !$cond {
            return Err($crate::error::Error::Parameter(format!($($arg)+)));
        }
    };
}
pub(crate) use ensure_param;
