// SPDX-License-Identifier: Apache-2.0

//! Cycle-level model of a LUT GEMM accelerator.
//!
//! A centroid computation module (CCM) of pipelined CCUs encodes input
//! subvectors and pushes indices through asynchronous FIFOs. Lookup modules
//! (IMMs) hold a row's index in an indices buffer, read partial sums from one
//! of two ping-pong table banks and accumulate them in a scratchpad, while a
//! shared loader fills the other bank at a bounded bandwidth.
//!
//! Work order follows the LUT-stationary schedule: output tiles are spread
//! round-robin over the IMMs and every tile walks all subspaces, each
//! subspace streaming all resident rows. The IMMs reading their first tile of
//! a row block consume indices straight from the FIFOs; later tiles of the
//! same block replay the stored indices.

mod check;
mod config;
mod engine;
mod error;
mod trace;

pub use check::{replay_functional, steady_state_check, SteadyState};
pub use config::HwConfig;
pub use engine::{simulate, simulate_functional};
pub use error::{Result, SimError};
pub use trace::{SimTrace, Stalls, TraceEvent, UnitStats, Utilization};
