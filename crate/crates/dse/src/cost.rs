// SPDX-License-Identifier: Apache-2.0

//! Area and power composition from per-component cost tables.

use lutdla_core::{ceil_log2, DistPrecision, SimilarityMetric};
use serde::{Deserialize, Serialize};

use crate::error::{config, Result};
use crate::point::DesignPoint;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UnitCost {
    pub area: f64,
    pub power: f64,
}

impl UnitCost {
    fn positive(&self, what: &str) -> Result<()> {
        if !(self.area > 0.0 && self.power > 0.0) || !self.area.is_finite() || !self.power.is_finite() {
            return Err(config(format!("{what}: area and power must be positive")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PrecisionCosts {
    pub fp32: UnitCost,
    pub bf16: UnitCost,
}

impl PrecisionCosts {
    pub fn get(&self, p: DistPrecision) -> UnitCost {
        match p {
            DistPrecision::Fp32 => self.fp32,
            DistPrecision::Bf16 => self.bf16,
        }
    }
}

/// Cost of one distance lane (one vector element) of a dPE.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DpeCosts {
    pub l2: PrecisionCosts,
    pub l1: PrecisionCosts,
    pub chebyshev: PrecisionCosts,
}

impl DpeCosts {
    pub fn get(&self, metric: SimilarityMetric) -> &PrecisionCosts {
        match metric {
            SimilarityMetric::L2 => &self.l2,
            SimilarityMetric::L1 => &self.l1,
            SimilarityMetric::Chebyshev => &self.chebyshev,
        }
    }
}

/// Relative (unitless) hardware costs.
///
/// The defaults are synthetic: they respect Chebyshev < L1 < L2 and
/// BF16 < FP32 but carry no absolute silicon meaning.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostTables {
    pub dpe_lane: DpeCosts,
    pub sram_bit: UnitCost,
    pub adder: UnitCost,
    pub other: UnitCost,
    /// Rows provisioned in each IMM scratchpad and indices buffer.
    pub scratchpad_rows: usize,
    pub psum_bits: u32,
}

impl Default for CostTables {
    fn default() -> Self {
        let pc = |a32: f64, p32: f64| PrecisionCosts {
            fp32: UnitCost { area: a32, power: p32 },
            bf16: UnitCost { area: a32 * 0.45, power: p32 * 0.4 },
        };
        Self {
            dpe_lane: DpeCosts { l2: pc(1.0, 1.0), l1: pc(0.35, 0.3), chebyshev: pc(0.3, 0.25) },
            sram_bit: UnitCost { area: 1.5e-4, power: 2e-5 },
            adder: UnitCost { area: 0.3, power: 0.25 },
            other: UnitCost { area: 20.0, power: 5.0 },
            scratchpad_rows: 512,
            psum_bits: 16,
        }
    }
}

impl CostTables {
    pub fn from_json(text: &str) -> Result<Self> {
        let t: CostTables = serde_json::from_str(text).map_err(|e| config(format!("cost tables: {e}")))?;
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, pc) in [("l2", &self.dpe_lane.l2), ("l1", &self.dpe_lane.l1), ("chebyshev", &self.dpe_lane.chebyshev)] {
            pc.fp32.positive(&format!("dpe_lane.{name}.fp32"))?;
            pc.bf16.positive(&format!("dpe_lane.{name}.bf16"))?;
        }
        self.sram_bit.positive("sram_bit")?;
        self.adder.positive("adder")?;
        self.other.positive("other")?;
        if self.scratchpad_rows == 0 || self.psum_bits == 0 {
            return Err(config("scratchpad_rows and psum_bits must be >= 1"));
        }
        let d = &self.dpe_lane;
        for p in [DistPrecision::Fp32, DistPrecision::Bf16] {
            let (l2, l1, ch) = (d.l2.get(p), d.l1.get(p), d.chebyshev.get(p));
            if l1.area > l2.area || l1.power > l2.power || ch.area > l1.area || ch.power > l1.power {
                return Err(config("dpe costs must satisfy chebyshev <= l1 <= l2"));
            }
        }
        Ok(())
    }
}

fn dist_bits(p: DistPrecision) -> f64 {
    match p {
        DistPrecision::Fp32 => 32.0,
        DistPrecision::Bf16 => 16.0,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AreaPower {
    pub area: f64,
    pub power: f64,
    pub ccu: UnitCost,
    pub imm: UnitCost,
}

/// `cost_IMM · n_IMM + cost_CCU · n_CCU + cost_other` for area and power.
///
/// A CCU holds `c` chained dPEs with `v` lanes each plus its centroid
/// buffer. An IMM holds two PSum LUT banks of `c · T_n` entries, a scratchpad
/// and indices buffer sized by `scratchpad_rows`, and one adder per lane.
pub fn area_power(point: &DesignPoint, tables: &CostTables) -> Result<AreaPower> {
    point.validate()?;
    let (v, c) = (point.v as f64, point.c as f64);
    let lane = tables.dpe_lane.get(point.metric).get(point.dist_precision);
    let centroid_bits = c * v * dist_bits(point.dist_precision);
    let ccu = UnitCost {
        area: c * v * lane.area + centroid_bits * tables.sram_bit.area,
        power: c * v * lane.power + centroid_bits * tables.sram_bit.power,
    };
    let rows = tables.scratchpad_rows as f64;
    let imm_bits = 2.0 * c * point.t_n as f64 * f64::from(point.lut_precision.bits())
        + rows * point.t_n as f64 * f64::from(tables.psum_bits)
        + rows * f64::from(ceil_log2(point.c).max(1));
    let lanes = point.lut_banks as f64;
    let imm = UnitCost {
        area: imm_bits * tables.sram_bit.area + lanes * tables.adder.area,
        power: imm_bits * tables.sram_bit.power + lanes * tables.adder.power,
    };
    let (ni, nc) = (point.n_imm as f64, point.n_ccu as f64);
    Ok(AreaPower {
        area: imm.area * ni + ccu.area * nc + tables.other.area,
        power: imm.power * ni + ccu.power * nc + tables.other.power,
        ccu,
        imm,
    })
}
