// SPDX-License-Identifier: Apache-2.0

//! Similarity metrics used to compare subvectors with centroids.

use half::bf16;
use serde::{Deserialize, Serialize};

use crate::error::{mismatch, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SimilarityMetric {
    /// Sum of squared differences (no square root).
    #[default]
    L2,
    /// Sum of absolute differences.
    L1,
    /// Largest absolute coordinate difference.
    Chebyshev,
}

impl SimilarityMetric {
    pub const ALL: [SimilarityMetric; 3] =
        [SimilarityMetric::L2, SimilarityMetric::L1, SimilarityMetric::Chebyshev];

    pub fn name(self) -> &'static str {
        match self {
            SimilarityMetric::L2 => "l2",
            SimilarityMetric::L1 => "l1",
            SimilarityMetric::Chebyshev => "chebyshev",
        }
    }

    #[inline]
    pub(crate) fn eval_f64(self, x: &[f64], z: &[f64]) -> f64 {
        let diffs = x.iter().zip(z).map(|(a, b)| a - b);
        match self {
            SimilarityMetric::L2 => diffs.map(|d| d * d).sum(),
            SimilarityMetric::L1 => diffs.map(f64::abs).sum(),
            SimilarityMetric::Chebyshev => diffs.fold(0.0, |m, d| m.max(d.abs())),
        }
    }

    #[inline]
    fn eval_f32(self, diffs: impl Iterator<Item = f32>) -> f32 {
        match self {
            SimilarityMetric::L2 => diffs.map(|d| d * d).sum(),
            SimilarityMetric::L1 => diffs.map(f32::abs).sum(),
            SimilarityMetric::Chebyshev => diffs.fold(0.0, |m, d| m.max(d.abs())),
        }
    }
}

impl std::fmt::Display for SimilarityMetric {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for SimilarityMetric {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "l2" => Ok(SimilarityMetric::L2),
            "l1" => Ok(SimilarityMetric::L1),
            "chebyshev" | "linf" => Ok(SimilarityMetric::Chebyshev),
            other => Err(format!("unknown metric `{other}`")),
        }
    }
}

/// Arithmetic precision used when comparing subvectors with centroids.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DistPrecision {
    #[default]
    Fp32,
    /// Operands rounded to bfloat16, accumulation in f32.
    Bf16,
}

/// Full-precision distance between two equal-length vectors.
pub fn distance(x: &[f64], z: &[f64], metric: SimilarityMetric) -> Result<f64> {
    if x.len() != z.len() {
        return Err(mismatch(format!("vector lengths {} and {}", x.len(), z.len())));
    }
    Ok(metric.eval_f64(x, z))
}

/// Distance evaluated at the hardware comparison precision. Callers guarantee
/// equal lengths.
#[inline]
pub fn distance_at(x: &[f64], z: &[f64], metric: SimilarityMetric, precision: DistPrecision) -> f32 {
    match precision {
        DistPrecision::Fp32 => metric.eval_f32(x.iter().zip(z).map(|(a, b)| *a as f32 - *b as f32)),
        DistPrecision::Bf16 => metric.eval_f32(
            x.iter().zip(z).map(|(a, b)| round_bf16(*a) - round_bf16(*b)),
        ),
    }
}

#[inline]
pub fn round_bf16(x: f64) -> f32 {
    bf16::from_f32(x as f32).to_f32()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn identical_vectors_are_at_zero_distance() {
        let x = [1.5, -2.0, 3.25];
        for metric in SimilarityMetric::ALL {
            assert_eq!(distance(&x, &x, metric).unwrap(), 0.0);
        }
    }

    #[test]
    fn hand_evaluated_distances() {
        let (x, z) = ([1.0, 2.0], [4.0, 6.0]);
        assert_eq!(distance(&x, &z, SimilarityMetric::L2).unwrap(), 25.0);
        assert_eq!(distance(&x, &z, SimilarityMetric::L1).unwrap(), 7.0);
        assert_eq!(distance(&x, &z, SimilarityMetric::Chebyshev).unwrap(), 4.0);
    }

    #[test]
    fn length_mismatch_is_an_error() {
        assert!(distance(&[1.0], &[1.0, 2.0], SimilarityMetric::L1).is_err());
    }

    #[test]
    fn bf16_rounds_mantissa() {
        // 1 + 2^-9 is below bf16 resolution at 1.0
        assert_eq!(round_bf16(1.0 + 2f64.powi(-9)), 1.0);
        assert_eq!(round_bf16(1.5), 1.5);
    }

    proptest! {
        #[test]
        fn metric_inequalities(pairs in prop::collection::vec((-50.0f64..50.0, -50.0f64..50.0), 1..16)) {
            let x: Vec<f64> = pairs.iter().map(|p| p.0).collect();
            let z: Vec<f64> = pairs.iter().map(|p| p.1).collect();
            let v = x.len() as f64;
            let l2 = distance(&x, &z, SimilarityMetric::L2).unwrap();
            let l1 = distance(&x, &z, SimilarityMetric::L1).unwrap();
            let ch = distance(&x, &z, SimilarityMetric::Chebyshev).unwrap();
            let eps = 1e-9 * (1.0 + l1 * l1);
            prop_assert!(ch <= l1 + eps);
            prop_assert!(l1 <= v * ch + eps);
            prop_assert!(l1 * l1 <= v * l2 + eps);
        }
    }
}
