// SPDX-License-Identifier: Apache-2.0

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::metric::{DistPrecision, SimilarityMetric};

/// GEMM problem `C[M×N] = A[M×K] · B[K×N]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemShape {
    pub m: usize,
    pub k: usize,
    pub n: usize,
}

impl ProblemShape {
    pub fn new(m: usize, k: usize, n: usize) -> Result<Self> {
        let shape = Self { m, k, n };
        shape.validate()?;
        Ok(shape)
    }

    pub fn validate(&self) -> Result<()> {
        if self.m == 0 || self.k == 0 || self.n == 0 {
            return Err(invalid(format!("degenerate problem shape {self:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LutPrecision {
    #[default]
    Fp32,
    Int8,
}

impl LutPrecision {
    pub fn bits(self) -> u32 {
        match self {
            LutPrecision::Fp32 => 32,
            LutPrecision::Int8 => 8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VqConfig {
    /// Subvector length.
    pub v: usize,
    /// Centroids per codebook.
    pub c: usize,
    #[serde(default)]
    pub metric: SimilarityMetric,
    #[serde(default)]
    pub dist_precision: DistPrecision,
    #[serde(default)]
    pub lut_precision: LutPrecision,
}

impl VqConfig {
    pub fn new(v: usize, c: usize, metric: SimilarityMetric) -> Self {
        Self {
            v,
            c,
            metric,
            dist_precision: DistPrecision::Fp32,
            lut_precision: LutPrecision::Fp32,
        }
    }

    /// Validation for configurations used with learned codebooks. A single
    /// centroid is accepted here because the degenerate `c = 1` case is a
    /// useful analysis baseline; [`VqConfig::validate_strict`] enforces `c ≥ 2`.
    pub fn validate(&self) -> Result<()> {
        if self.v == 0 {
            return Err(invalid("subvector length v must be >= 1"));
        }
        if self.c == 0 {
            return Err(invalid("centroid count c must be >= 1"));
        }
        Ok(())
    }

    pub fn validate_strict(&self) -> Result<()> {
        self.validate()?;
        if self.c < 2 {
            return Err(invalid("centroid count c must be >= 2"));
        }
        Ok(())
    }

    /// Number of subspaces `⌈K/v⌉`.
    pub fn subspaces(&self, k: usize) -> usize {
        k.div_ceil(self.v)
    }

    /// Width of a centroid index, `⌈log2 c⌉` (0 for a single centroid).
    pub fn index_bits(&self) -> u32 {
        ceil_log2(self.c)
    }

    /// Bits per original input element after index encoding.
    pub fn equivalent_bits(&self) -> f64 {
        f64::from(self.index_bits()) / self.v as f64
    }
}

pub fn ceil_log2(x: usize) -> u32 {
    if x <= 1 {
        0
    } else {
        usize::BITS - (x - 1).leading_zeros()
    }
}
