use thiserror::Error;

#[derive(Debug, Error)]
pub enum RbmError {
    #[error("dimension mismatch: {what} has length {found}, expected {expected}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("enumeration over {units} units exceeds the limit of {limit}")]
    Capacity { units: usize, limit: usize },

    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },

    #[error("parameters became non-finite at iteration {iteration}")]
    Diverged { iteration: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, RbmError>;

pub(crate) fn check_len(what: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(RbmError::DimensionMismatch {
            what,
            expected,
            found,
        })
    }
}

pub(crate) fn invalid(msg: impl Into<String>) -> RbmError {
    RbmError::InvalidArgument(msg.into())
}
