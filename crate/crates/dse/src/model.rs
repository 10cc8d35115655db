// SPDX-License-Identifier: Apache-2.0

//! Operation-count, memory and cycle models.

use std::fmt;
use std::str::FromStr;

use lutdla_core::{ceil_log2, ProblemShape, SimilarityMetric, VqConfig};
use serde::{Deserialize, Serialize};

use crate::error::{config, Result};
use crate::point::DesignPoint;

/// Operations per element for one similarity comparison: a multiply and an
/// add for L2, a single add-like op for L1 and Chebyshev.
pub fn alpha_sim(metric: SimilarityMetric) -> u64 {
    match metric {
        SimilarityMetric::L2 => 2,
        SimilarityMetric::L1 | SimilarityMetric::Chebyshev => 1,
    }
}

/// How the similarity term counts subspaces.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TauVariant {
    /// `α · c · M · v · ⌈K/v⌉`.
    #[default]
    Subspaces,
    /// `α · c · M · v · ⌈c/v⌉`, the alternative typeset form.
    CentroidRatio,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tau {
    pub op_sim: u64,
    pub op_add: u64,
    pub total: u64,
}

pub fn tau(shape: &ProblemShape, cfg: &VqConfig) -> Tau {
    tau_with(shape, cfg, TauVariant::Subspaces)
}

pub fn tau_with(shape: &ProblemShape, cfg: &VqConfig, variant: TauVariant) -> Tau {
    let (m, n, v, c) = (shape.m as u64, shape.n as u64, cfg.v as u64, cfg.c as u64);
    let n_c = cfg.subspaces(shape.k) as u64;
    let groups = match variant {
        TauVariant::Subspaces => n_c,
        TauVariant::CentroidRatio => c.div_ceil(v),
    };
    let op_sim = alpha_sim(cfg.metric) * c * m * v * groups;
    let op_add = m * n * n_c;
    Tau { op_sim, op_add, total: op_sim + op_add }
}

/// Memory bits of a LUT GEMM: tables, outputs and input indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Phi {
    pub lut_bits: u64,
    pub out_bits: u64,
    pub index_bits: u64,
    pub total: u64,
}

pub fn phi(shape: &ProblemShape, cfg: &VqConfig, bit_lut: u32, bit_out: u32) -> Phi {
    let (m, n) = (shape.m as u64, shape.n as u64);
    let n_c = cfg.subspaces(shape.k) as u64;
    let lut_bits = n * cfg.c as u64 * n_c * u64::from(bit_lut);
    let out_bits = m * n * u64::from(bit_out);
    let index_bits = n_c * m * u64::from(ceil_log2(cfg.c));
    Phi { lut_bits, out_bits, index_bits, total: lut_bits + out_bits + index_bits }
}

/// Dense GEMM reference: `2·M·K·N` operations, `(MK + KN + MN)·width` bits.
pub fn dense_baseline(shape: &ProblemShape, width: u32) -> (u64, u64) {
    let (m, k, n) = (shape.m as u64, shape.k as u64, shape.n as u64);
    (2 * m * k * n, (m * k + k * n + m * n) * u64::from(width))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Bound {
    Load,
    Sim,
    Lut,
}

impl Bound {
    pub fn label(self) -> &'static str {
        match self {
            Bound::Load => "load",
            Bound::Sim => "sim",
            Bound::Lut => "lut",
        }
    }
}

impl fmt::Display for Bound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Bound {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "load" => Ok(Bound::Load),
            "sim" => Ok(Bound::Sim),
            "lut" => Ok(Bound::Lut),
            other => Err(format!("unknown bound {other:?}")),
        }
    }
}

/// Reading of the table-loading term.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LoadModel {
    /// All table traffic of the GEMM through the shared loader,
    /// `⌈K/v⌉ · N · c · bit_lut / β`.
    #[default]
    Streamed,
    /// `c · bit_lut / β · n_IMM`, one column group per IMM.
    PerColumn,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Omega {
    pub load: f64,
    pub sim: f64,
    pub lut: f64,
    pub cycles: f64,
    pub binding: Bound,
}

pub fn omega(shape: &ProblemShape, point: &DesignPoint) -> Result<Omega> {
    omega_with(shape, point, LoadModel::Streamed)
}

/// Cycle estimate `max(load, sim, lut)`, in IMM cycles.
///
/// `sim` is `M·⌈K/v⌉ / n_CCU` (one subvector per CCU per cycle) and `lut` is
/// `M·N·⌈K/v⌉ / (n_IMM · lanes)`. Ties resolve towards `lut`, then `sim`.
pub fn omega_with(shape: &ProblemShape, point: &DesignPoint, load_model: LoadModel) -> Result<Omega> {
    shape.validate()?;
    point.validate()?;
    if point.n_ccu == 0 || point.n_imm == 0 {
        return Err(config("omega needs at least one CCU and one IMM"));
    }
    let (m, n) = (shape.m as f64, shape.n as f64);
    let n_c = point.vq().subspaces(shape.k) as f64;
    let bit_lut = f64::from(point.lut_precision.bits());
    let load = match point.beta {
        None => 0.0,
        Some(beta) => match load_model {
            LoadModel::Streamed => n_c * n * point.c as f64 * bit_lut / beta,
            LoadModel::PerColumn => point.c as f64 * bit_lut / beta * point.n_imm as f64,
        },
    };
    let sim = m * n_c / point.n_ccu as f64;
    let lut = m * n * n_c / (point.n_imm * point.lut_banks) as f64;
    let (cycles, binding) = [(lut, Bound::Lut), (sim, Bound::Sim), (load, Bound::Load)]
        .into_iter()
        .fold((f64::NEG_INFINITY, Bound::Lut), |best, cur| if cur.0 > best.0 { cur } else { best });
    Ok(Omega { load, sim, lut, cycles, binding })
}
