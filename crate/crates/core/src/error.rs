use alloc::string::String;
use core::fmt;

/// Error type shared by all modules in this crate.
#[derive(Debug, Clone, PartialEq)]
pub enum CoreError {
    /// Dimension below the minimum the operation needs, or mismatched shapes.
    InvalidDimension(String),
    /// A numeric argument is outside its allowed range.
    InvalidArgument(String),
    /// An input object fails its own invariants (norm, trace, PSD, ...).
    InvalidState(String),
    /// A sampler's internal bound was violated; indicates a bug, not bad data.
    SamplerFailure(String),
    /// Input data is empty or malformed.
    InvalidData(String),
}

impl fmt::Display for CoreError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CoreError::InvalidDimension(m) => write!(f, "invalid dimension: {m}"),
            CoreError::InvalidArgument(m) => write!(f, "invalid argument: {m}"),
            CoreError::InvalidState(m) => write!(f, "invalid state: {m}"),
            CoreError::SamplerFailure(m) => write!(f, "sampler failure: {m}"),
            CoreError::InvalidData(m) => write!(f, "invalid data: {m}"),
        }
    }
}

impl core::error::Error for CoreError {}
