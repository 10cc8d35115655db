// SPDX-License-Identifier: Apache-2.0

use lutdla_core::dataflow::TileConfig;
use lutdla_core::{ProblemShape, VqConfig};
use lutdla_dse::DesignPoint;
use serde::{Deserialize, Serialize};

use crate::error::{config, Result};

/// Microarchitecture parameters of one accelerator instance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HwConfig {
    pub n_ccu: usize,
    /// Distance PEs chained in each CCU. Each handles `⌈c/dpes⌉` centroids.
    pub dpes: usize,
    pub n_imm: usize,
    /// Lookup-accumulate lanes per IMM.
    pub lut_banks: usize,
    #[serde(default = "default_fifo_depth")]
    pub fifo_depth: usize,
    /// Synchroniser stages on the CCM to IMM crossing, in IMM cycles.
    #[serde(default = "default_sync")]
    pub sync_stages: u64,
    #[serde(default = "one")]
    pub ccm_freq: u64,
    #[serde(default = "one")]
    pub imm_freq: u64,
    /// Off-chip bandwidth in bits per IMM cycle; `None` loads instantly.
    #[serde(default)]
    pub beta: Option<f64>,
    pub tile: TileConfig,
    #[serde(default = "default_max_cycles")]
    pub max_cycles: u64,
    /// Record JSON-lines events.
    #[serde(default)]
    pub trace: bool,
}

fn default_fifo_depth() -> usize {
    8
}

fn default_sync() -> u64 {
    2
}

fn one() -> u64 {
    1
}

fn default_max_cycles() -> u64 {
    1 << 40
}

impl HwConfig {
    /// One CCU with a dPE per centroid, one IMM, same clock on both sides.
    pub fn new(shape: &ProblemShape, vq: &VqConfig, lut_banks: usize, t_n: usize) -> Self {
        Self {
            n_ccu: 1,
            dpes: vq.c,
            n_imm: 1,
            lut_banks,
            fifo_depth: default_fifo_depth(),
            sync_stages: default_sync(),
            ccm_freq: 1,
            imm_freq: 1,
            beta: None,
            tile: TileConfig::new(t_n.min(shape.n), shape.m),
            max_cycles: default_max_cycles(),
            trace: false,
        }
    }

    /// Hardware for a design point: one dPE per centroid, equal clocks and
    /// all rows resident.
    pub fn from_design(point: &DesignPoint, shape: &ProblemShape) -> Self {
        Self {
            n_ccu: point.n_ccu,
            dpes: point.c,
            n_imm: point.n_imm,
            lut_banks: point.lut_banks,
            beta: point.beta,
            ..Self::new(shape, &point.vq(), point.lut_banks, point.t_n)
        }
    }

    pub fn validate(&self, shape: &ProblemShape, vq: &VqConfig) -> Result<()> {
        shape.validate()?;
        vq.validate()?;
        self.tile.validate(shape)?;
        let counts = [("n_ccu", self.n_ccu), ("dpes", self.dpes), ("n_imm", self.n_imm), ("lut_banks", self.lut_banks), ("fifo_depth", self.fifo_depth)];
        if let Some((name, _)) = counts.iter().find(|(_, n)| *n == 0) {
            return Err(config(format!("{name} must be >= 1")));
        }
        if self.dpes > vq.c {
            return Err(config(format!("{} dPEs for {} centroids", self.dpes, vq.c)));
        }
        if self.ccm_freq == 0 || self.imm_freq == 0 {
            return Err(config("clock frequencies must be >= 1"));
        }
        if let Some(b) = self.beta {
            if b.is_nan() || b < 0.0 {
                return Err(config(format!("bandwidth must be >= 0, got {b}")));
            }
        }
        Ok(())
    }

    /// Initiation interval of a CCU in CCM cycles.
    pub fn ccu_interval(&self, c: usize) -> u64 {
        c.div_ceil(self.dpes) as u64
    }

    /// Cycles from issuing a subvector to its index leaving the last dPE.
    pub fn ccu_latency(&self, c: usize) -> u64 {
        self.dpes as u64 * self.ccu_interval(c)
    }
}
