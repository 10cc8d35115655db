// SPDX-License-Identifier: Apache-2.0

//! Precomputed partial-sum tables and lookup-accumulate GEMM.

use serde::{Deserialize, Serialize};

use crate::codebook::{Codebook, EncodedMatrix};
use crate::config::LutPrecision;
use crate::error::{mismatch, Result, VqError};
use crate::matrix::Matrix;

/// Output columns sharing one INT8 scale when no tile width is given.
pub const DEFAULT_SCALE_TILE: usize = 16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum LutStorage {
    Fp32(Vec<f32>),
    /// Symmetric INT8 with one scale per (subspace, output tile).
    Int8 { values: Vec<i8>, scales: Vec<f64> },
}

/// Entries indexed by (subspace `k`, centroid `j`, output column `n`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsumTable {
    subspaces: usize,
    c: usize,
    n: usize,
    scale_tile: usize,
    storage: LutStorage,
}

impl PsumTable {
    pub fn subspaces(&self) -> usize {
        self.subspaces
    }

    pub fn centroids(&self) -> usize {
        self.c
    }

    pub fn cols(&self) -> usize {
        self.n
    }

    pub fn scale_tile(&self) -> usize {
        self.scale_tile
    }

    pub fn precision(&self) -> LutPrecision {
        match self.storage {
            LutStorage::Fp32(_) => LutPrecision::Fp32,
            LutStorage::Int8 { .. } => LutPrecision::Int8,
        }
    }

    pub fn storage(&self) -> &LutStorage {
        &self.storage
    }

    pub fn from_parts(subspaces: usize, c: usize, n: usize, scale_tile: usize, storage: LutStorage) -> Result<Self> {
        let len = subspaces * c * n;
        let tiles = subspaces * n.div_ceil(scale_tile.max(1));
        let ok = match &storage {
            LutStorage::Fp32(v) => v.len() == len,
            LutStorage::Int8 { values, scales } => values.len() == len && scales.len() == tiles,
        };
        if !ok || scale_tile == 0 {
            return Err(mismatch("PSum table payload does not match its header"));
        }
        Ok(Self { subspaces, c, n, scale_tile, storage })
    }

    #[inline]
    fn offset(&self, k: usize, j: usize) -> usize {
        (k * self.c + j) * self.n
    }

    /// Dequantized entry.
    #[inline]
    pub fn entry(&self, k: usize, j: usize, n: usize) -> f64 {
        let at = self.offset(k, j) + n;
        match &self.storage {
            LutStorage::Fp32(v) => f64::from(v[at]),
            LutStorage::Int8 { values, scales } => {
                let tiles = self.n.div_ceil(self.scale_tile);
                f64::from(values[at]) * scales[k * tiles + n / self.scale_tile]
            }
        }
    }

    /// Adds row (`k`, `j`) restricted to columns `cols` into `acc`.
    #[inline]
    pub fn accumulate(&self, k: usize, j: usize, cols: std::ops::Range<usize>, acc: &mut [f64]) {
        let base = self.offset(k, j);
        match &self.storage {
            LutStorage::Fp32(v) => {
                for (a, e) in acc.iter_mut().zip(&v[base + cols.start..base + cols.end]) {
                    *a += f64::from(*e);
                }
            }
            LutStorage::Int8 { .. } => {
                for (a, n) in acc.iter_mut().zip(cols) {
                    *a += self.entry(k, j, n);
                }
            }
        }
    }

    /// Table size in bits at `bit_lut` bits per entry.
    pub fn size_bits(&self, bit_lut: u64) -> u64 {
        (self.n * self.c * self.subspaces) as u64 * bit_lut
    }
}

/// Exact centroid × weight partial products, `Σ_i Z[k][j][i] · B[k·v+i][n]`.
pub fn psum_exact(codebook: &Codebook, b: &Matrix) -> Result<Vec<f64>> {
    if b.rows() != codebook.k() {
        return Err(mismatch(format!("B has {} rows, codebook expects K = {}", b.rows(), codebook.k())));
    }
    let (v, c, n_c, n) = (codebook.v(), codebook.c(), codebook.subspaces(), b.cols());
    let b_pad = b.pad_rows(codebook.padded_k());
    let mut out = vec![0.0; n_c * c * n];
    for k in 0..n_c {
        for j in 0..c {
            let z = codebook.centroid(k, j);
            let dst = &mut out[(k * c + j) * n..(k * c + j + 1) * n];
            for (i, zi) in z.iter().enumerate() {
                let brow = b_pad.row(k * v + i);
                for (d, bv) in dst.iter_mut().zip(brow) {
                    *d += zi * bv;
                }
            }
        }
    }
    Ok(out)
}

pub fn build_lut(codebook: &Codebook, b: &Matrix, precision: LutPrecision) -> Result<PsumTable> {
    build_lut_tiled(codebook, b, precision, DEFAULT_SCALE_TILE)
}

/// Builds the table; INT8 scales are shared by `scale_tile` output columns.
pub fn build_lut_tiled(codebook: &Codebook, b: &Matrix, precision: LutPrecision, scale_tile: usize) -> Result<PsumTable> {
    let exact = psum_exact(codebook, b)?;
    let (c, n_c, n) = (codebook.c(), codebook.subspaces(), b.cols());
    let scale_tile = scale_tile.clamp(1, n.max(1));
    let storage = match precision {
        LutPrecision::Fp32 => LutStorage::Fp32(exact.iter().map(|&x| x as f32).collect()),
        LutPrecision::Int8 => {
            let tiles = n.div_ceil(scale_tile);
            let mut scales = vec![0.0; n_c * tiles];
            for k in 0..n_c {
                for t in 0..tiles {
                    let cols = t * scale_tile..((t + 1) * scale_tile).min(n);
                    let mut max_abs = 0.0f64;
                    for j in 0..c {
                        for col in cols.clone() {
                            max_abs = max_abs.max(exact[(k * c + j) * n + col].abs());
                        }
                    }
                    scales[k * tiles + t] = max_abs / 127.0;
                }
            }
            let values = exact
                .iter()
                .enumerate()
                .map(|(at, &x)| {
                    let k = at / (c * n);
                    let col = at % n;
                    let s = scales[k * tiles + col / scale_tile];
                    if s == 0.0 {
                        0
                    } else {
                        (x / s).round_ties_even().clamp(-127.0, 127.0) as i8
                    }
                })
                .collect();
            LutStorage::Int8 { values, scales }
        }
    };
    PsumTable::from_parts(n_c, c, n, scale_tile, storage)
}

/// `C[m][n] = Σ_k table(k, idx[m][k], n)`, accumulated in f64 in subspace order.
pub fn lut_gemm(encoded: &EncodedMatrix, table: &PsumTable) -> Result<Matrix> {
    if encoded.subspaces() != table.subspaces() {
        return Err(mismatch(format!(
            "encoding has {} subspaces, table has {}",
            encoded.subspaces(),
            table.subspaces()
        )));
    }
    let n = table.cols();
    let mut out = Matrix::zeros(encoded.rows(), n);
    for m in 0..encoded.rows() {
        let acc = out.row_mut(m);
        for (k, &idx) in encoded.row(m).iter().enumerate() {
            let j = idx as usize;
            if j >= table.centroids() {
                return Err(VqError::Corruption(format!(
                    "index {j} at ({m}, {k}) exceeds table depth {}",
                    table.centroids()
                )));
            }
            table.accumulate(k, j, 0..n, acc);
        }
    }
    Ok(out)
}
