//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by tensors, transforms, solvers, and file I/O.
#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: expected {expected:?}, got {got:?}")]
    ShapeMismatch { expected: Vec<usize>, got: Vec<usize> },

    #[error("axis {axis} out of range for a tensor of {ndim} dimensions")]
    AxisOutOfRange { axis: usize, ndim: usize },

    #[error("empty input")]
    EmptyInput,

    #[error("mask marks every sample as missing")]
    AllMissing,

    #[error("input contains non-finite values")]
    NonFinite,

    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("iteration diverged: {0}")]
    Diverged(String),

    #[error("malformed input: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
