// SPDX-License-Identifier: Apache-2.0

//! Lowering of NCHW convolution inputs to GEMM operands.

use crate::error::{invalid, Result};
use crate::matrix::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConvGeometry {
    pub channels: usize,
    pub height: usize,
    pub width: usize,
    pub kernel: usize,
    pub stride: usize,
    pub padding: usize,
}

impl ConvGeometry {
    pub fn out_height(&self) -> usize {
        (self.height + 2 * self.padding - self.kernel) / self.stride + 1
    }

    pub fn out_width(&self) -> usize {
        (self.width + 2 * self.padding - self.kernel) / self.stride + 1
    }

    /// Inner GEMM dimension, `C·kh·kw`.
    pub fn patch_len(&self) -> usize {
        self.channels * self.kernel * self.kernel
    }
}

/// Reshapes a batch of NCHW images into `(batch·OH·OW) × (C·kh·kw)` patches.
/// Patch columns are ordered channel-major, then kernel row, then kernel column.
pub fn im2col(input: &[f64], batch: usize, geo: &ConvGeometry) -> Result<Matrix> {
    let plane = geo.height * geo.width;
    if input.len() != batch * geo.channels * plane {
        return Err(invalid(format!("{} values for batch {batch} of {geo:?}", input.len())));
    }
    if geo.kernel == 0 || geo.stride == 0 || geo.kernel > geo.height + 2 * geo.padding || geo.kernel > geo.width + 2 * geo.padding {
        return Err(invalid(format!("bad convolution geometry {geo:?}")));
    }
    let (oh, ow) = (geo.out_height(), geo.out_width());
    let mut out = Matrix::zeros(batch * oh * ow, geo.patch_len());
    for b in 0..batch {
        for oy in 0..oh {
            for ox in 0..ow {
                let row = out.row_mut((b * oh + oy) * ow + ox);
                let mut col = 0;
                for ch in 0..geo.channels {
                    for ky in 0..geo.kernel {
                        for kx in 0..geo.kernel {
                            let y = (oy * geo.stride + ky) as isize - geo.padding as isize;
                            let x = (ox * geo.stride + kx) as isize - geo.padding as isize;
                            if y >= 0 && x >= 0 && (y as usize) < geo.height && (x as usize) < geo.width {
                                row[col] = input[(b * geo.channels + ch) * plane + y as usize * geo.width + x as usize];
                            }
                            col += 1;
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_by_one_kernel_is_a_transpose() {
        let geo = ConvGeometry { channels: 2, height: 2, width: 2, kernel: 1, stride: 1, padding: 0 };
        let input: Vec<f64> = (0..8).map(f64::from).collect();
        let m = im2col(&input, 1, &geo).unwrap();
        assert_eq!(m.shape(), (4, 2));
        assert_eq!(m.row(3), &[3.0, 7.0]);
    }

    #[test]
    fn padding_inserts_zeros() {
        let geo = ConvGeometry { channels: 1, height: 2, width: 2, kernel: 3, stride: 1, padding: 1 };
        let m = im2col(&[1.0, 2.0, 3.0, 4.0], 1, &geo).unwrap();
        assert_eq!(m.shape(), (4, 9));
        assert_eq!(m.row(0), &[0.0, 0.0, 0.0, 0.0, 1.0, 2.0, 0.0, 3.0, 4.0]);
    }

    #[test]
    fn size_mismatch_is_rejected() {
        let geo = ConvGeometry { channels: 1, height: 2, width: 2, kernel: 1, stride: 1, padding: 0 };
        assert!(im2col(&[1.0], 1, &geo).is_err());
    }
}
