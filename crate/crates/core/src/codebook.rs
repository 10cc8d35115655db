// SPDX-License-Identifier: Apache-2.0

//! Subspace partitioning, codebooks and index encoding.

use serde::{Deserialize, Serialize};

use crate::config::VqConfig;
use crate::error::{invalid, mismatch, Result, VqError};
use crate::kmeans::kmeans_fit;
use crate::matrix::Matrix;
use crate::metric::{distance_at, DistPrecision, SimilarityMetric};

/// Splits the columns of `a` into `⌈K/v⌉` groups of width `v`. The last group
/// is zero-padded when `K` is not a multiple of `v`.
pub fn partition(a: &Matrix, v: usize) -> Result<Vec<Matrix>> {
    a.ensure_nonempty("input matrix")?;
    if v == 0 {
        return Err(invalid("subvector length v must be >= 1"));
    }
    let n_c = a.cols().div_ceil(v);
    Ok((0..n_c)
        .map(|k| {
            Matrix::from_fn(a.rows(), v, |r, i| {
                let col = k * v + i;
                if col < a.cols() {
                    a[(r, col)]
                } else {
                    0.0
                }
            })
        })
        .collect())
}

/// One `c × v` centroid matrix per subspace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Codebook {
    v: usize,
    c: usize,
    /// Original inner dimension; columns past `k` are zero padding.
    k: usize,
    centroids: Vec<Matrix>,
}

impl Codebook {
    pub fn new(k: usize, v: usize, centroids: Vec<Matrix>) -> Result<Self> {
        if v == 0 || k == 0 {
            return Err(invalid("codebook needs k >= 1 and v >= 1"));
        }
        let n_c = k.div_ceil(v);
        if centroids.len() != n_c {
            return Err(mismatch(format!("expected {n_c} subspace codebooks, got {}", centroids.len())));
        }
        let c = centroids[0].rows();
        if c == 0 {
            return Err(invalid("codebook without centroids"));
        }
        for z in &centroids {
            if z.shape() != (c, v) {
                return Err(mismatch(format!("centroid block {:?}, expected ({c}, {v})", z.shape())));
            }
            if !z.all_finite() {
                return Err(invalid("non-finite centroid"));
            }
        }
        Ok(Self { v, c, k, centroids })
    }

    /// Learns every subspace codebook from the rows of `a` with k-means.
    pub fn fit(a: &Matrix, cfg: &VqConfig, seed: u64) -> Result<Self> {
        cfg.validate()?;
        let parts = partition(a, cfg.v)?;
        let centroids = parts
            .iter()
            .enumerate()
            .map(|(k, sub)| kmeans_fit(sub, cfg.c, cfg.metric, subspace_seed(seed, k)).map(|f| f.centroids))
            .collect::<Result<Vec<_>>>()?;
        Self::new(a.cols(), cfg.v, centroids)
    }

    pub fn v(&self) -> usize {
        self.v
    }

    pub fn c(&self) -> usize {
        self.c
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn subspaces(&self) -> usize {
        self.centroids.len()
    }

    pub fn padded_k(&self) -> usize {
        self.subspaces() * self.v
    }

    pub fn subspace(&self, k: usize) -> &Matrix {
        &self.centroids[k]
    }

    pub fn subspace_mut(&mut self, k: usize) -> &mut Matrix {
        &mut self.centroids[k]
    }

    pub fn centroid(&self, k: usize, j: usize) -> &[f64] {
        self.centroids[k].row(j)
    }

    pub fn blocks(&self) -> &[Matrix] {
        &self.centroids
    }

    pub fn parameter_count(&self) -> usize {
        self.subspaces() * self.c * self.v
    }

    /// Centroid reconstruction `Â` (`M × K`, padding dropped).
    pub fn reconstruct(&self, encoded: &EncodedMatrix) -> Result<Matrix> {
        self.check_encoded(encoded)?;
        let mut out = Matrix::zeros(encoded.rows(), self.k);
        for m in 0..encoded.rows() {
            let row = out.row_mut(m);
            for k in 0..self.subspaces() {
                let z = self.centroid(k, encoded.get(m, k) as usize);
                for (i, val) in z.iter().enumerate() {
                    let col = k * self.v + i;
                    if col < self.k {
                        row[col] = *val;
                    }
                }
            }
        }
        Ok(out)
    }

    fn check_encoded(&self, encoded: &EncodedMatrix) -> Result<()> {
        if encoded.subspaces() != self.subspaces() {
            return Err(mismatch(format!(
                "encoding has {} subspaces, codebook has {}",
                encoded.subspaces(),
                self.subspaces()
            )));
        }
        if let Some(bad) = encoded.indices.iter().find(|&&i| i as usize >= self.c) {
            return Err(VqError::Corruption(format!("centroid index {bad} out of range (c = {})", self.c)));
        }
        Ok(())
    }
}

pub(crate) fn subspace_seed(seed: u64, k: usize) -> u64 {
    seed ^ (k as u64).wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Row-major `M × N_c` centroid indices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncodedMatrix {
    rows: usize,
    subspaces: usize,
    indices: Vec<u32>,
}

impl EncodedMatrix {
    pub fn new(rows: usize, subspaces: usize, indices: Vec<u32>) -> Result<Self> {
        if indices.len() != rows * subspaces {
            return Err(mismatch(format!("{} indices for {rows}x{subspaces}", indices.len())));
        }
        Ok(Self { rows, subspaces, indices })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn subspaces(&self) -> usize {
        self.subspaces
    }

    #[inline]
    pub fn get(&self, m: usize, k: usize) -> u32 {
        self.indices[m * self.subspaces + k]
    }

    pub fn row(&self, m: usize) -> &[u32] {
        &self.indices[m * self.subspaces..(m + 1) * self.subspaces]
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.indices
    }
}

/// Index of the most similar centroid; ties resolve to the lowest index.
#[inline]
pub fn nearest_centroid(x: &[f64], centroids: &Matrix, metric: SimilarityMetric, precision: DistPrecision) -> u32 {
    let mut best = 0u32;
    let mut best_d = f32::INFINITY;
    for j in 0..centroids.rows() {
        let d = distance_at(x, centroids.row(j), metric, precision);
        if d < best_d {
            best_d = d;
            best = j as u32;
        }
    }
    best
}

/// Copies subvector `k` of row `row` into `buf`, zero-padding past the end.
#[inline]
pub fn load_subvector(row: &[f64], k: usize, v: usize, buf: &mut [f64]) {
    for (i, slot) in buf.iter_mut().enumerate().take(v) {
        *slot = row.get(k * v + i).copied().unwrap_or(0.0);
    }
}

/// Maps every subvector of `a` to its nearest centroid.
pub fn encode(
    a: &Matrix,
    codebook: &Codebook,
    metric: SimilarityMetric,
    precision: DistPrecision,
) -> Result<EncodedMatrix> {
    a.ensure_nonempty("input matrix")?;
    if a.cols() != codebook.k() {
        return Err(mismatch(format!("input has K = {}, codebook expects {}", a.cols(), codebook.k())));
    }
    let (v, n_c) = (codebook.v(), codebook.subspaces());
    let mut indices = Vec::with_capacity(a.rows() * n_c);
    let mut buf = vec![0.0; v];
    for m in 0..a.rows() {
        let row = a.row(m);
        for k in 0..n_c {
            load_subvector(row, k, v, &mut buf);
            indices.push(nearest_centroid(&buf, codebook.subspace(k), metric, precision));
        }
    }
    EncodedMatrix::new(a.rows(), n_c, indices)
}
