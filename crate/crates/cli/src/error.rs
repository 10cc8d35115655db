// SPDX-License-Identifier: Apache-2.0

use lutdla_core::VqError;
use lutdla_dse::DseError;
use lutdla_sim::SimError;
use lutdla_train::TrainError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad configuration or input data.
    #[error("invalid input: {0}")]
    Input(String),
    /// The design search left no candidate standing.
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error("{0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Internal(_) => 1,
            CliError::Input(_) => 2,
            CliError::Infeasible(_) => 3,
        }
    }

    pub fn input(msg: impl std::fmt::Display) -> Self {
        CliError::Input(msg.to_string())
    }

    pub fn internal(msg: impl std::fmt::Display) -> Self {
        CliError::Internal(msg.to_string())
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

impl From<VqError> for CliError {
    fn from(e: VqError) -> Self {
        match e {
            VqError::Corruption(_) => CliError::internal(e),
            _ => CliError::input(e),
        }
    }
}

impl From<TrainError> for CliError {
    fn from(e: TrainError) -> Self {
        match e {
            TrainError::Vq(v) => v.into(),
            TrainError::Config(_) => CliError::input(e),
            _ => CliError::internal(e),
        }
    }
}

impl From<DseError> for CliError {
    fn from(e: DseError) -> Self {
        match e {
            DseError::Vq(v) => v.into(),
            DseError::Probe(t) => t.into(),
            DseError::Config(_) => CliError::input(e),
        }
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::Vq(v) => v.into(),
            SimError::Config(_) => CliError::input(e),
            _ => CliError::internal(e),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::internal(e)
    }
}
