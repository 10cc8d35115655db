// SPDX-License-Identifier: Apache-2.0

use serde::{Deserialize, Serialize};

use crate::codebook::{encode, Codebook};
use crate::config::VqConfig;
use crate::error::{mismatch, Result};
use crate::lut::{build_lut, lut_gemm};
use crate::matrix::Matrix;

/// Reference product in f64, i-k-j loop order.
pub fn exact_gemm(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    if a.cols() != b.rows() {
        return Err(mismatch(format!("inner dimensions {} and {}", a.cols(), b.rows())));
    }
    let mut out = Matrix::zeros(a.rows(), b.cols());
    for i in 0..a.rows() {
        let arow = a.row(i);
        let orow = out.row_mut(i);
        for (k, aik) in arow.iter().enumerate() {
            for (o, bkj) in orow.iter_mut().zip(b.row(k)) {
                *o += aik * bkj;
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AmmError {
    /// `‖approx − exact‖_F / ‖exact‖_F`; `None` when the exact product is zero.
    pub frobenius_rel: Option<f64>,
    pub frobenius_abs: f64,
    pub max_abs: f64,
    pub zero_norm: bool,
}

impl AmmError {
    pub fn between(approx: &Matrix, exact: &Matrix) -> Result<Self> {
        let diff = approx.sub(exact)?;
        let abs = diff.frobenius_norm();
        let norm = exact.frobenius_norm();
        let zero_norm = norm == 0.0;
        Ok(Self {
            frobenius_rel: (!zero_norm).then(|| abs / norm),
            frobenius_abs: abs,
            max_abs: diff.max_abs(),
            zero_norm,
        })
    }
}

/// Runs the full encode → table → lookup pipeline and compares it with
/// [`exact_gemm`].
pub fn amm_error(a: &Matrix, b: &Matrix, cfg: &VqConfig, codebook: &Codebook) -> Result<AmmError> {
    let approx = approx_gemm(a, b, cfg, codebook)?;
    let exact = exact_gemm(a, b)?;
    AmmError::between(&approx, &exact)
}

pub fn approx_gemm(a: &Matrix, b: &Matrix, cfg: &VqConfig, codebook: &Codebook) -> Result<Matrix> {
    let encoded = encode(a, codebook, cfg.metric, cfg.dist_precision)?;
    let table = build_lut(codebook, b, cfg.lut_precision)?;
    lut_gemm(&encoded, &table)
}
