// SPDX-License-Identifier: Apache-2.0

use thiserror::Error;

#[derive(Debug, Error)]
pub enum VqError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    /// An index or table entry violated an invariant established upstream.
    #[error("corrupt data: {0}")]
    Corruption(String),
    #[error("format error: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, VqError>;

pub(crate) fn invalid(msg: impl Into<String>) -> VqError {
    VqError::InvalidInput(msg.into())
}

pub(crate) fn mismatch(msg: impl Into<String>) -> VqError {
    VqError::ShapeMismatch(msg.into())
}
