// SPDX-License-Identifier: Apache-2.0

use serde::{Deserialize, Serialize};

use super::TileConfig;
use crate::config::{ceil_log2, ProblemShape, VqConfig};

/// GEMM loop orders, outermost first. `Ls` is the LUT-Stationary order
/// N → K → M with ping-pong LUT banks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum DataflowKind {
    Mnk,
    Nmk,
    Mkn,
    Kmn,
    Knm,
    Ls,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Dim {
    M,
    N,
    K,
}

impl DataflowKind {
    pub const ALL: [DataflowKind; 6] =
        [DataflowKind::Mnk, DataflowKind::Nmk, DataflowKind::Mkn, DataflowKind::Kmn, DataflowKind::Knm, DataflowKind::Ls];

    pub fn name(self) -> &'static str {
        match self {
            DataflowKind::Mnk => "MNK",
            DataflowKind::Nmk => "NMK",
            DataflowKind::Mkn => "MKN",
            DataflowKind::Kmn => "KMN",
            DataflowKind::Knm => "KNM",
            DataflowKind::Ls => "LS",
        }
    }

    fn order(self) -> [Dim; 3] {
        use Dim::*;
        match self {
            DataflowKind::Mnk => [M, N, K],
            DataflowKind::Nmk => [N, M, K],
            DataflowKind::Mkn => [M, K, N],
            DataflowKind::Kmn => [K, M, N],
            DataflowKind::Knm => [K, N, M],
            DataflowKind::Ls => [N, K, M],
        }
    }

    fn depth(self, d: Dim) -> usize {
        self.order().iter().position(|x| *x == d).unwrap()
    }

    fn inside(self, inner: Dim, outer: Dim) -> bool {
        self.depth(inner) > self.depth(outer)
    }

    pub fn ping_pong(self) -> bool {
        self == DataflowKind::Ls
    }
}

impl std::str::FromStr for DataflowKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        DataflowKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s) || (s.eq_ignore_ascii_case("nkm") && *k == DataflowKind::Ls))
            .ok_or_else(|| format!("unknown dataflow `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BitWidths {
    pub bit_lut: u32,
    pub bit_idx: u32,
    pub bit_psum: u32,
    pub bit_out: u32,
}

impl BitWidths {
    /// 8-bit LUT and output entries, 16-bit partial sums, `⌈log2 c⌉`-bit indices.
    pub fn defaults_for(cfg: &VqConfig) -> Self {
        Self { bit_lut: 8, bit_idx: ceil_log2(cfg.c).max(1), bit_psum: 16, bit_out: 8 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MemoryFootprint {
    pub scratchpad_bits: u64,
    pub indices_bits: u64,
    pub psumlut_bits: u64,
    pub total_bits: u64,
    /// PSum LUT includes a shadow bank.
    pub psumlut_ping_pong: bool,
}

pub fn bits_to_kib(bits: u64) -> f64 {
    bits as f64 / 8.0 / 1024.0
}

impl MemoryFootprint {
    pub fn scratchpad_kib(&self) -> f64 {
        bits_to_kib(self.scratchpad_bits)
    }

    pub fn indices_kib(&self) -> f64 {
        bits_to_kib(self.indices_bits)
    }

    pub fn psumlut_kib(&self) -> f64 {
        bits_to_kib(self.psumlut_bits)
    }

    pub fn total_kib(&self) -> f64 {
        bits_to_kib(self.total_bits)
    }
}

/// Minimum on-chip buffers for `kind` such that no PSum LUT region
/// (one subspace × one output tile) is fetched twice.
///
/// * Scratchpad: partial sums stay live while the K loop runs, so every row
///   or column loop nested inside K contributes its full extent (`m_tile`
///   rows, `N` columns); loops outside K contribute one row or one `T_n` tile.
/// * Indices: indices are streamed from the comparison units, so only the
///   innermost loop's working set is buffered: `N_c` indices when K is
///   innermost, one when N is innermost, `m_tile` when M is innermost.
/// * PSum LUT: a region is reused across the M loop, so every K or N loop
///   nested inside M multiplies the resident regions (`N_c` subspaces, `N`
///   columns instead of a `T_n` tile). LS double-buffers its single region.
pub fn footprint(
    kind: DataflowKind,
    shape: &ProblemShape,
    cfg: &VqConfig,
    tile: &TileConfig,
    widths: &BitWidths,
) -> MemoryFootprint {
    let n_c = cfg.subspaces(shape.k) as u64;
    let (m_tile, t_n, n) = (tile.m_tile as u64, tile.t_n as u64, shape.n as u64);

    let acc_rows = if kind.inside(Dim::M, Dim::K) { m_tile } else { 1 };
    let acc_cols = if kind.inside(Dim::N, Dim::K) { n } else { t_n };
    let scratchpad_bits = acc_rows * acc_cols * u64::from(widths.bit_psum);

    let streamed = match kind.order()[2] {
        Dim::K => n_c,
        Dim::N => 1,
        Dim::M => m_tile,
    };
    let indices_bits = streamed * u64::from(widths.bit_idx);

    let lut_subspaces = if kind.inside(Dim::K, Dim::M) { n_c } else { 1 };
    let lut_cols = if kind.inside(Dim::N, Dim::M) { n } else { t_n };
    let banks = if kind.ping_pong() { 2 } else { 1 };
    let psumlut_bits = banks * lut_subspaces * lut_cols * cfg.c as u64 * u64::from(widths.bit_lut);

    MemoryFootprint {
        scratchpad_bits,
        indices_bits,
        psumlut_bits,
        total_bits: scratchpad_bits + indices_bits + psumlut_bits,
        psumlut_ping_pong: kind.ping_pong(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::SimilarityMetric;
    use proptest::prelude::*;

    fn table_setup() -> (ProblemShape, VqConfig, TileConfig, BitWidths) {
        let shape = ProblemShape::new(512, 768, 768).unwrap();
        let cfg = VqConfig::new(4, 32, SimilarityMetric::L2);
        let widths = BitWidths { bit_lut: 8, bit_idx: 5, bit_psum: 16, bit_out: 8 };
        (shape, cfg, TileConfig::new(16, 512), widths)
    }

    #[test]
    fn lut_stationary_row() {
        let (shape, cfg, tile, widths) = table_setup();
        let f = footprint(DataflowKind::Ls, &shape, &cfg, &tile, &widths);
        assert_eq!(f.indices_kib(), 0.3125);
        assert_eq!(f.psumlut_kib(), 1.0);
        assert_eq!(f.scratchpad_kib(), 16.0);
        assert_eq!(f.total_kib(), 17.3125);
        assert_eq!(BitWidths::defaults_for(&cfg), widths);
    }

    #[test]
    fn other_rows() {
        let (shape, cfg, tile, widths) = table_setup();
        let f = |k| footprint(k, &shape, &cfg, &tile, &widths);
        // one T_n tile of 16-bit partial sums
        assert_eq!(f(DataflowKind::Mnk).scratchpad_kib(), 0.03125);
        assert_eq!(f(DataflowKind::Nmk).scratchpad_kib(), 0.03125);
        // a single streamed index (5 bits ≈ 0.6 B)
        assert_eq!(f(DataflowKind::Mkn).indices_bits, 5);
        assert_eq!(f(DataflowKind::Kmn).indices_bits, 5);
        assert_eq!(f(DataflowKind::Knm).indices_kib(), 0.3125);
        assert_eq!(f(DataflowKind::Kmn).psumlut_kib(), 24.0);
        assert_eq!(f(DataflowKind::Mnk).psumlut_kib(), 4608.0);
        let narrow = BitWidths { bit_psum: 8, ..widths };
        assert_eq!(footprint(DataflowKind::Kmn, &shape, &cfg, &tile, &narrow).scratchpad_kib(), 384.0);
    }

    #[test]
    fn untiled_ls_keeps_whole_output() {
        let shape = ProblemShape::new(20, 12, 10).unwrap();
        let cfg = VqConfig::new(3, 8, SimilarityMetric::L1);
        let widths = BitWidths::defaults_for(&cfg);
        let f = footprint(DataflowKind::Ls, &shape, &cfg, &TileConfig::new(10, 20), &widths);
        assert_eq!(f.scratchpad_bits, 20 * 10 * 16);
    }

    #[test]
    fn ls_trades_lut_for_scratchpad() {
        let (shape, cfg, tile, widths) = table_setup();
        let ls = footprint(DataflowKind::Ls, &shape, &cfg, &tile, &widths);
        for k in [DataflowKind::Mnk, DataflowKind::Nmk, DataflowKind::Mkn] {
            assert!(ls.psumlut_bits <= footprint(k, &shape, &cfg, &tile, &widths).psumlut_bits);
        }
        for k in [DataflowKind::Kmn, DataflowKind::Knm] {
            assert!(ls.scratchpad_bits <= footprint(k, &shape, &cfg, &tile, &widths).scratchpad_bits);
        }
    }

    proptest! {
        #[test]
        fn totals_are_monotone(
            kind in 0usize..6,
            m in 1usize..64, k in 1usize..64, n in 1usize..64,
            v in 1usize..8, c in 2usize..64,
            t in 1usize..64, bits in 1u32..16,
        ) {
            let kind = DataflowKind::ALL[kind];
            let shape = ProblemShape::new(m, k, n).unwrap();
            let t_n = t.min(n);
            let tile = TileConfig::new(t_n, m);
            let cfg = VqConfig::new(v, c, SimilarityMetric::L2);
            let w = BitWidths { bit_lut: bits, bit_idx: ceil_log2(c), bit_psum: bits, bit_out: bits };
            let base = footprint(kind, &shape, &cfg, &tile, &w);
            prop_assert_eq!(base.total_bits, base.scratchpad_bits + base.indices_bits + base.psumlut_bits);

            let more_c = VqConfig::new(v, c + 1, SimilarityMetric::L2);
            let w_c = BitWidths { bit_idx: ceil_log2(c + 1), ..w };
            prop_assert!(footprint(kind, &shape, &more_c, &tile, &w_c).total_bits >= base.total_bits);
            if t_n < n {
                let wider = TileConfig::new(t_n + 1, m);
                prop_assert!(footprint(kind, &shape, &cfg, &wider, &w).total_bits >= base.total_bits);
            }
            for bump in [
                BitWidths { bit_lut: bits + 1, ..w },
                BitWidths { bit_idx: w.bit_idx + 1, ..w },
                BitWidths { bit_psum: bits + 1, ..w },
            ] {
                prop_assert!(footprint(kind, &shape, &cfg, &tile, &bump).total_bits >= base.total_bits);
            }
        }
    }
}
