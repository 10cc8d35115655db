// SPDX-License-Identifier: Apache-2.0

//! Analytical models and design-space search for LUT GEMM accelerators.
//!
//! `tau` counts operations, `phi` counts memory bits, `area_power` composes
//! component costs and `omega` estimates cycles as the slowest of table
//! loading, similarity search and lookup. `search` prunes a design space by
//! those models, an accuracy probe and a greedy IMM expansion.

pub mod cost;
pub mod error;
pub mod model;
pub mod point;
pub mod probe;
pub mod search;

pub use cost::{area_power, AreaPower, CostTables, UnitCost};
pub use error::{DseError, Result};
pub use model::{alpha_sim, dense_baseline, omega, omega_with, phi, tau, tau_with, Bound, LoadModel, Omega, Phi, Tau, TauVariant};
pub use point::DesignPoint;
pub use probe::{AccuracyProbe, ToyProbe};
pub use search::{evaluate, heatmap_csv, search, Constraints, Evaluated, Infeasible, ModelOptions, SearchReport, SearchSpace, StepSummary};
