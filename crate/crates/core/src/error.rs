//! Error type shared by all core modules.

use alloc::string::String;
use core::fmt;

/// Errors raised by core operations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CoreError {
    /// A caller-supplied argument is outside its documented domain.
    InvalidParameter(String),
    /// Inconsistent configuration (pool strata, split counts, ...).
    Config(String),
    /// A cross-object contract was violated (trajectory/task mismatch,
    /// feature-spec mismatch, wrong batch size).
    Contract(String),
    /// The requested computation exceeds a documented exact-oracle cap.
    UnsupportedSize(String),
    /// A numeric evaluation produced a non-finite value.
    NonFinite(String),
}

impl fmt::Display for CoreError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CoreError::InvalidParameter(msg) => write!(f, "invalid parameter: {msg}"),
            CoreError::Config(msg) => write!(f, "config error: {msg}"),
            CoreError::Contract(msg) => write!(f, "contract violation: {msg}"),
            CoreError::UnsupportedSize(msg) => write!(f, "unsupported size: {msg}"),
            CoreError::NonFinite(msg) => write!(f, "non-finite value: {msg}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for CoreError {}

pub type Result<T> = core::result::Result<T, CoreError>;
