// SPDX-License-Identifier: Apache-2.0

use lutdla_core::VqError;
use thiserror::Error;

use crate::trace::Stalls;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid hardware configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Vq(#[from] VqError),
    /// No unit can make progress. `state` lists FIFO and bank contents.
    #[error("deadlock at cycle {cycle}: {state}")]
    Deadlock { cycle: u64, state: String, stalls: Stalls },
    #[error("cycle limit {limit} exceeded")]
    CycleLimit { limit: u64, stalls: Stalls },
    #[error("output mismatch at ({m}, {n}): simulated {simulated}, reference {reference}")]
    Mismatch { m: usize, n: usize, simulated: f64, reference: f64 },
}

pub type Result<T> = std::result::Result<T, SimError>;

pub(crate) fn config(msg: impl Into<String>) -> SimError {
    SimError::Config(msg.into())
}
