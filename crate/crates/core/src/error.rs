use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("parameter error: {0}")]
    Parameter(String),
    #[error("unsupported parameter: {0}")]
    Unsupported(String),
    #[error("argument {x} outside supported range |x| <= {limit}")]
    UnsupportedRange { x: f64, limit: f64 },
    #[error("resource cap exceeded: expected {expected:.3e} jumps per path, cap is {cap:.3e}")]
    ResourceCap { expected: f64, cap: f64 },
    #[error("contract error: {0}")]
    Contract(String),
    #[error("numeric error: {0}")]
    Numeric(String),
    #[error("format error: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn param(msg: impl Into<String>) -> Error {
    Error::Parameter(msg.into())
}
