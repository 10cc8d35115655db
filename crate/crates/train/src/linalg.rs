// SPDX-License-Identifier: Apache-2.0

use lutdla_core::Matrix;

/// `a · b`
pub fn matmul(a: &Matrix, b: &Matrix) -> Matrix {
    lutdla_core::exact_gemm(a, b).expect("shapes checked by caller")
}

/// `aᵀ · b`
pub fn matmul_tn(a: &Matrix, b: &Matrix) -> Matrix {
    debug_assert_eq!(a.rows(), b.rows());
    let mut out = Matrix::zeros(a.cols(), b.cols());
    for r in 0..a.rows() {
        let brow = b.row(r);
        for (i, ai) in a.row(r).iter().enumerate() {
            for (o, bj) in out.row_mut(i).iter_mut().zip(brow) {
                *o += ai * bj;
            }
        }
    }
    out
}

/// `a · bᵀ`
pub fn matmul_nt(a: &Matrix, b: &Matrix) -> Matrix {
    debug_assert_eq!(a.cols(), b.cols());
    Matrix::from_fn(a.rows(), b.rows(), |i, j| a.row(i).iter().zip(b.row(j)).map(|(x, y)| x * y).sum())
}

pub fn add_bias(m: &mut Matrix, bias: &[f64]) {
    for r in 0..m.rows() {
        for (x, b) in m.row_mut(r).iter_mut().zip(bias) {
            *x += b;
        }
    }
}

pub fn column_sums(m: &Matrix) -> Vec<f64> {
    let mut out = vec![0.0; m.cols()];
    for r in 0..m.rows() {
        for (o, x) in out.iter_mut().zip(m.row(r)) {
            *o += x;
        }
    }
    out
}

pub fn axpy(dst: &mut [f64], alpha: f64, src: &[f64]) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d += alpha * s;
    }
}

pub fn checksum(values: &[f64]) -> u64 {
    values.iter().fold(0xcbf2_9ce4_8422_2325u64, |h, x| (h ^ x.to_bits()).wrapping_mul(0x1000_0000_01b3))
}
