// SPDX-License-Identifier: Apache-2.0

use std::collections::VecDeque;

use super::TileConfig;
use crate::codebook::{load_subvector, nearest_centroid, Codebook};
use crate::config::{ProblemShape, VqConfig};
use crate::error::{mismatch, Result};
use crate::lut::build_lut;
use crate::matrix::Matrix;

#[derive(Debug, Clone)]
pub struct LsRun {
    pub output: Matrix,
    /// Row encodings requested from the comparison stage.
    pub get_index_calls: usize,
    /// PSum LUT banks brought on chip.
    pub lut_loads: usize,
}

/// Executes the LUT-Stationary schedule: output tiles outermost, then
/// subspaces, then rows. A row is encoded once per output tile, when the
/// first subspace is visited; its indices are queued and drained one
/// subspace at a time into a single-entry-per-row indices buffer.
pub fn ls_execute(a: &Matrix, b: &Matrix, cfg: &VqConfig, codebook: &Codebook, tile: &TileConfig) -> Result<LsRun> {
    a.ensure_nonempty("input matrix")?;
    if a.cols() != codebook.k() || b.rows() != codebook.k() {
        return Err(mismatch(format!(
            "A is {:?}, B is {:?}, codebook expects K = {}",
            a.shape(),
            b.shape(),
            codebook.k()
        )));
    }
    let shape = ProblemShape::new(a.rows(), a.cols(), b.cols())?;
    tile.validate(&shape)?;

    let table = build_lut(codebook, b, cfg.lut_precision)?;
    let (v, n_c) = (codebook.v(), codebook.subspaces());
    let mut out = Matrix::zeros(shape.m, shape.n);
    let mut get_index_calls = 0;
    let mut lut_loads = 0;
    let mut subvec = vec![0.0; v];

    for row0 in (0..shape.m).step_by(tile.m_tile) {
        let rows = row0..(row0 + tile.m_tile).min(shape.m);
        for nt in 0..tile.n_tiles(shape.n) {
            let cols = nt * tile.t_n..((nt + 1) * tile.t_n).min(shape.n);
            let width = cols.len();
            let mut psum = vec![0.0; rows.len() * width];
            let mut fifo: Vec<VecDeque<u32>> = vec![VecDeque::with_capacity(n_c); rows.len()];
            let mut indices_buffer = vec![0u32; rows.len()];

            for k in 0..n_c {
                // PSum LUT[..] <- PSum LUT[..][k][n]
                lut_loads += 1;
                for (local, m) in rows.clone().enumerate() {
                    if k == 0 {
                        get_index_calls += 1;
                        let row = a.row(m);
                        for kk in 0..n_c {
                            load_subvector(row, kk, v, &mut subvec);
                            fifo[local].push_back(nearest_centroid(&subvec, codebook.subspace(kk), cfg.metric, cfg.dist_precision));
                        }
                    }
                    indices_buffer[local] = fifo[local].pop_front().expect("one index per subspace");
                    let idx = indices_buffer[local] as usize;
                    table.accumulate(k, idx, cols.clone(), &mut psum[local * width..(local + 1) * width]);
                }
            }
            for (local, m) in rows.clone().enumerate() {
                out.row_mut(m)[cols.clone()].copy_from_slice(&psum[local * width..(local + 1) * width]);
            }
        }
    }
    Ok(LsRun { output: out, get_index_calls, lut_loads })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codebook::encode;
    use crate::lut::lut_gemm;
    use crate::metric::SimilarityMetric;
    use rand::{Rng, SeedableRng};

    fn instance(seed: u64) -> (Matrix, Matrix, VqConfig, Codebook) {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let a = Matrix::from_fn(8, 8, |_, _| rng.gen_range(-2.0..2.0));
        let b = Matrix::from_fn(8, 8, |_, _| rng.gen_range(-2.0..2.0));
        let cfg = VqConfig::new(2, 4, SimilarityMetric::L2);
        let cb = Codebook::fit(&a, &cfg, seed).unwrap();
        (a, b, cfg, cb)
    }

    fn reference(a: &Matrix, b: &Matrix, cfg: &VqConfig, cb: &Codebook) -> Matrix {
        let e = encode(a, cb, cfg.metric, cfg.dist_precision).unwrap();
        lut_gemm(&e, &build_lut(cb, b, cfg.lut_precision).unwrap()).unwrap()
    }

    #[test]
    fn matches_lookup_gemm_exactly() {
        for seed in 0..20 {
            let (a, b, cfg, cb) = instance(seed);
            let run = ls_execute(&a, &b, &cfg, &cb, &TileConfig::new(4, 8)).unwrap();
            assert_eq!(run.output, reference(&a, &b, &cfg, &cb));
        }
    }

    #[test]
    fn single_tile_degenerates_gracefully() {
        let (a, b, cfg, cb) = instance(3);
        let run = ls_execute(&a, &b, &cfg, &cb, &TileConfig::new(8, 8)).unwrap();
        assert_eq!(run.output, reference(&a, &b, &cfg, &cb));
        assert_eq!(run.get_index_calls, 8);
        assert_eq!(run.lut_loads, 4);
    }

    #[test]
    fn rows_are_encoded_once_per_output_tile() {
        let (a, _, cfg, cb) = instance(9);
        let b = Matrix::from_fn(8, 9, |r, c| (r as f64 - c as f64) * 0.1);
        // N = 9, T_n = 4 → 3 tiles
        let run = ls_execute(&a, &b, &cfg, &cb, &TileConfig::new(4, 8)).unwrap();
        assert_eq!(run.get_index_calls, 3 * 8);
        assert_eq!(run.lut_loads, 3 * 4);
        assert_eq!(run.output, reference(&a, &b, &cfg, &cb));
    }

    #[test]
    fn rejects_bad_tiles() {
        let (a, b, cfg, cb) = instance(1);
        assert!(ls_execute(&a, &b, &cfg, &cb, &TileConfig::new(0, 8)).is_err());
        assert!(ls_execute(&a, &b, &cfg, &cb, &TileConfig::new(9, 8)).is_err());
        assert!(ls_execute(&a, &b, &cfg, &cb, &TileConfig::new(4, 0)).is_err());
    }
}
