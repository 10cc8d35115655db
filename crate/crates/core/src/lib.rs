// SPDX-License-Identifier: Apache-2.0

//! Approximate matrix multiplication through vector quantization and lookup
//! tables.
//!
//! Rows of the input `A` are split into length-`v` subvectors, each subspace
//! gets its own learned codebook of `c` centroids, and products with the
//! weight matrix `B` are precomputed per centroid. Multiplication then
//! reduces to an index lookup followed by accumulation:
//!
//! ```
//! use lutdla_core::{Codebook, Matrix, SimilarityMetric, VqConfig};
//! use lutdla_core::{build_lut, encode, lut_gemm};
//!
//! let a = Matrix::from_fn(16, 8, |r, c| ((r * 3 + c) % 5) as f64);
//! let b = Matrix::from_fn(8, 4, |r, c| (r + c) as f64 * 0.5);
//! let cfg = VqConfig::new(2, 8, SimilarityMetric::L2);
//! let codebook = Codebook::fit(&a, &cfg, 0).unwrap();
//! let idx = encode(&a, &codebook, cfg.metric, cfg.dist_precision).unwrap();
//! let table = build_lut(&codebook, &b, cfg.lut_precision).unwrap();
//! let c = lut_gemm(&idx, &table).unwrap();
//! assert_eq!(c.shape(), (16, 4));
//! ```
//!
//! The [`dataflow`] module models on-chip buffering of the same computation
//! under different loop orders.

pub mod codebook;
pub mod config;
pub mod dataflow;
pub mod error;
pub mod gemm;
pub mod im2col;
pub mod io;
pub mod kmeans;
pub mod lut;
pub mod matrix;
pub mod metric;

pub use codebook::{encode, partition, Codebook, EncodedMatrix};
pub use config::{ceil_log2, LutPrecision, ProblemShape, VqConfig};
pub use error::{Result, VqError};
pub use gemm::{amm_error, approx_gemm, exact_gemm, AmmError};
pub use kmeans::{kmeans_fit, KMeansFit};
pub use lut::{build_lut, build_lut_tiled, lut_gemm, PsumTable};
pub use matrix::Matrix;
pub use metric::{distance, DistPrecision, SimilarityMetric};
