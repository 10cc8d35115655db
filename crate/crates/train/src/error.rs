// SPDX-License-Identifier: Apache-2.0

use lutdla_core::VqError;
use thiserror::Error;

use crate::stage::StageReport;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error(transparent)]
    Vq(#[from] VqError),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("non-finite loss at iteration {iteration}: task {task_loss}, reconstruction {re_loss}")]
    NonFinite { iteration: usize, task_loss: f64, re_loss: f64 },
    #[error("training diverged at iteration {iteration} (loss {loss:.3e})")]
    Diverged { iteration: usize, loss: f64, report: Box<StageReport> },
}

pub type Result<T> = std::result::Result<T, TrainError>;
