// SPDX-License-Identifier: Apache-2.0

//! On-chip memory models for GEMM loop orders and a functional executor of the
//! LUT-Stationary schedule.

mod executor;
mod footprint;

pub use executor::{ls_execute, LsRun};
pub use footprint::{footprint, BitWidths, DataflowKind, MemoryFootprint};

use serde::{Deserialize, Serialize};

use crate::config::{ProblemShape, VqConfig};
use crate::error::{invalid, Result};

/// Output tiling: `t_n` columns per tile and `m_tile` rows resident at once.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TileConfig {
    pub t_n: usize,
    pub m_tile: usize,
}

impl TileConfig {
    pub fn new(t_n: usize, m_tile: usize) -> Self {
        Self { t_n, m_tile }
    }

    pub fn validate(&self, shape: &ProblemShape) -> Result<()> {
        if self.t_n == 0 || self.t_n > shape.n {
            return Err(invalid(format!("tile width {} outside [1, {}]", self.t_n, shape.n)));
        }
        if self.m_tile == 0 || self.m_tile > shape.m {
            return Err(invalid(format!("row tile {} outside [1, {}]", self.m_tile, shape.m)));
        }
        Ok(())
    }

    /// Number of output tiles `⌈N/T_n⌉`.
    pub fn n_tiles(&self, n: usize) -> usize {
        n.div_ceil(self.t_n)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MinBandwidth {
    /// `T_n · N_c / M · freq`, in table entries per second.
    pub entries_per_second: f64,
    /// The same requirement scaled by `c · bit_lut` bits per entry row.
    pub bits_per_second: f64,
}

/// Off-chip bandwidth needed so that streaming `m_tile` rows through the
/// lookup units covers the load of the next LUT bank.
pub fn min_bandwidth(shape: &ProblemShape, cfg: &VqConfig, tile: &TileConfig, freq_hz: f64, bit_lut: u32) -> Result<MinBandwidth> {
    if tile.m_tile == 0 {
        return Err(invalid("row tile must be positive"));
    }
    let n_c = cfg.subspaces(shape.k) as f64;
    let entries = tile.t_n as f64 * n_c / tile.m_tile as f64 * freq_hz;
    Ok(MinBandwidth { entries_per_second: entries, bits_per_second: entries * cfg.c as f64 * f64::from(bit_lut) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::SimilarityMetric;

    #[test]
    fn bandwidth_plug_in() {
        let shape = ProblemShape::new(512, 768, 768).unwrap();
        let cfg = VqConfig::new(4, 32, SimilarityMetric::L2);
        let bw = min_bandwidth(&shape, &cfg, &TileConfig::new(16, 512), 300e6, 8).unwrap();
        assert_eq!(bw.entries_per_second, 1800e6);
        assert_eq!(bw.bits_per_second, 1800e6 * 256.0);
    }

    #[test]
    fn fewer_resident_rows_need_more_bandwidth() {
        let shape = ProblemShape::new(512, 768, 768).unwrap();
        let cfg = VqConfig::new(4, 32, SimilarityMetric::L2);
        let bw = |m| min_bandwidth(&shape, &cfg, &TileConfig::new(16, m), 300e6, 8).unwrap().bits_per_second;
        assert_eq!(bw(256), 2.0 * bw(512));
        let mut last = 0.0;
        for m in (1..=512).rev() {
            assert!(bw(m) >= last);
            last = bw(m);
        }
    }
}
