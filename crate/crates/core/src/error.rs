//! Error type shared by every module in the crate.

use alloc::string::String;
use core::fmt;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Error {
    /// Shape or dimensionality constraint violated.
    Shape(String),
    /// Invalid configuration value.
    Config(String),
    /// Malformed serialized tensor. `offset` is the byte position at which
    /// decoding failed.
    Format { offset: usize, reason: String },
    /// Index outside the valid range.
    Index(String),
    /// Non-finite value where finite arithmetic is required.
    Numeric(String),
    /// Mask with no active token where at least one is required.
    DegenerateMask(String),
    /// Invalid input data.
    Input(String),
    /// Training diverged or was misconfigured.
    Training(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Shape(msg) => write!(f, "shape error: {msg}"),
            Error::Config(msg) => write!(f, "config error: {msg}"),
            Error::Format { offset, reason } => {
                write!(f, "format error at byte {offset}: {reason}")
            }
            Error::Index(msg) => write!(f, "index error: {msg}"),
            Error::Numeric(msg) => write!(f, "numeric error: {msg}"),
            Error::DegenerateMask(msg) => write!(f, "degenerate mask: {msg}"),
            Error::Input(msg) => write!(f, "input error: {msg}"),
            Error::Training(msg) => write!(f, "training error: {msg}"),
        }
    }
}

impl core::error::Error for Error {}
