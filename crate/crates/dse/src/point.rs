// SPDX-License-Identifier: Apache-2.0

use std::cmp::Ordering;
use std::fmt;

use lutdla_core::{DistPrecision, LutPrecision, SimilarityMetric, VqConfig};
use serde::{Deserialize, Serialize};

use crate::error::{config, Result};

/// One hardware/algorithm configuration in the co-design space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignPoint {
    pub v: usize,
    pub c: usize,
    pub metric: SimilarityMetric,
    #[serde(default)]
    pub dist_precision: DistPrecision,
    #[serde(default = "default_lut_precision")]
    pub lut_precision: LutPrecision,
    pub n_ccu: usize,
    pub n_imm: usize,
    /// Parallel lookup lanes per IMM.
    #[serde(default = "default_lanes")]
    pub lut_banks: usize,
    #[serde(default = "default_tn")]
    pub t_n: usize,
    /// Off-chip bandwidth in bits per IMM cycle; `None` is unconstrained.
    #[serde(default)]
    pub beta: Option<f64>,
}

fn default_lut_precision() -> LutPrecision {
    LutPrecision::Int8
}

fn default_lanes() -> usize {
    16
}

fn default_tn() -> usize {
    16
}

impl DesignPoint {
    pub fn new(v: usize, c: usize, metric: SimilarityMetric, n_ccu: usize, n_imm: usize) -> Self {
        Self {
            v,
            c,
            metric,
            dist_precision: DistPrecision::Fp32,
            lut_precision: default_lut_precision(),
            n_ccu,
            n_imm,
            lut_banks: default_lanes(),
            t_n: default_tn(),
            beta: None,
        }
    }

    pub fn vq(&self) -> VqConfig {
        VqConfig { v: self.v, c: self.c, metric: self.metric, dist_precision: self.dist_precision, lut_precision: self.lut_precision }
    }

    pub fn validate(&self) -> Result<()> {
        self.vq().validate()?;
        if self.lut_banks == 0 || self.t_n == 0 {
            return Err(config("lut_banks and t_n must be >= 1"));
        }
        if let Some(b) = self.beta {
            if !(b > 0.0) || !b.is_finite() {
                return Err(config(format!("bandwidth must be positive and finite, got {b}")));
            }
        }
        Ok(())
    }

    /// Deterministic total order used to break ties after ω and area.
    pub fn cmp_key(&self, other: &Self) -> Ordering {
        self.v
            .cmp(&other.v)
            .then(self.c.cmp(&other.c))
            .then(self.metric.cmp(&other.metric))
            .then((self.dist_precision as u8).cmp(&(other.dist_precision as u8)))
            .then((self.lut_precision as u8).cmp(&(other.lut_precision as u8)))
            .then(self.n_ccu.cmp(&other.n_ccu))
            .then(self.n_imm.cmp(&other.n_imm))
            .then(self.lut_banks.cmp(&other.lut_banks))
            .then(self.t_n.cmp(&other.t_n))
            .then(cmp_beta(self.beta, other.beta))
    }
}

fn cmp_beta(a: Option<f64>, b: Option<f64>) -> Ordering {
    match (a, b) {
        (None, None) => Ordering::Equal,
        (None, Some(_)) => Ordering::Greater,
        (Some(_), None) => Ordering::Less,
        (Some(x), Some(y)) => x.total_cmp(&y),
    }
}

impl fmt::Display for DesignPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "v={} c={} {} ccu={} imm={} lanes={} tn={}", self.v, self.c, self.metric, self.n_ccu, self.n_imm, self.lut_banks, self.t_n)?;
        match self.beta {
            Some(b) => write!(f, " beta={b}"),
            None => write!(f, " beta=inf"),
        }
    }
}
