use thiserror::Error;

/// Errors raised by the kernels in this crate.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("unsupported operation: {0}")]
    UnsupportedOperation(String),
    #[error("internal error: {0}")]
    Internal(String),
    #[error("malformed image: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;

macro_rules! invalid {
    ($($arg:tt)*) => {
        $crate::error::Error::InvalidArgument(format!($($arg)*))
    };
}

macro_rules! ensure {
    ($cond:expr, $($arg:tt)*) => {
        // Written as a match so NaN comparisons fail the check.
        match $cond {
            true => {}
            false => return Err($crate::error::Error::InvalidArgument(format!($($arg)*))),
        }
    };
}

pub(crate) use {ensure, invalid};
