// SPDX-License-Identifier: Apache-2.0

use lutdla_core::VqError;
use lutdla_train::TrainError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DseError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Vq(#[from] VqError),
    #[error("accuracy probe failed: {0}")]
    Probe(#[from] TrainError),
}

pub type Result<T> = std::result::Result<T, DseError>;

pub(crate) fn config(msg: impl Into<String>) -> DseError {
    DseError::Config(msg.into())
}
