// SPDX-License-Identifier: Apache-2.0

//! Small feed-forward networks with dense and LUT linear operators.

use lutdla_core::{build_lut, encode, lut_gemm, Codebook, EncodedMatrix, Matrix, VqConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Result, TrainError};
use crate::linalg::{add_bias, column_sums, matmul, matmul_nt, matmul_tn};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Layer {
    Dense { w: Matrix, b: Vec<f64> },
    /// Linear operator whose input is replaced by its centroid reconstruction.
    /// The dense weights are kept so the lookup table can be rebuilt.
    LutLinear { w: Matrix, b: Vec<f64>, codebook: Codebook, cfg: VqConfig },
    Relu,
    Tanh,
}

impl Layer {
    pub fn is_linear(&self) -> bool {
        matches!(self, Layer::Dense { .. } | Layer::LutLinear { .. })
    }

    pub fn weights(&self) -> Option<(&Matrix, &[f64])> {
        match self {
            Layer::Dense { w, b } | Layer::LutLinear { w, b, .. } => Some((w, b)),
            _ => None,
        }
    }

    pub fn parameter_count(&self) -> usize {
        match self {
            Layer::Dense { w, b } => w.rows() * w.cols() + b.len(),
            Layer::LutLinear { w, b, codebook, .. } => w.rows() * w.cols() + b.len() + codebook.parameter_count(),
            _ => 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LossHead {
    /// Softmax cross-entropy over class logits.
    CrossEntropy,
    MeanSquared,
}

#[derive(Debug, Clone)]
pub enum Targets<'a> {
    Classes(&'a [usize]),
    Values(&'a Matrix),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TinyNet {
    pub layers: Vec<Layer>,
    pub head: LossHead,
}

/// Per-layer activations retained for the backward pass.
#[derive(Debug, Clone)]
pub(crate) enum LayerCache {
    Linear { input: Matrix },
    Lut { input: Matrix, recon: Matrix, encoded: EncodedMatrix },
    Act { input: Matrix },
}

impl TinyNet {
    /// Dense MLP with `act` between linear layers and Xavier-uniform weights.
    pub fn mlp(widths: &[usize], act: Layer, head: LossHead, seed: u64) -> Self {
        assert!(widths.len() >= 2, "an MLP needs input and output widths");
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut layers = Vec::new();
        for (i, pair) in widths.windows(2).enumerate() {
            let (k, n) = (pair[0], pair[1]);
            let bound = (6.0 / (k + n) as f64).sqrt();
            let w = Matrix::from_fn(k, n, |_, _| rng.gen_range(-bound..bound));
            layers.push(Layer::Dense { w, b: vec![0.0; n] });
            if i + 2 < widths.len() {
                layers.push(act.clone());
            }
        }
        Self { layers, head }
    }

    pub fn validate(&self) -> Result<()> {
        let mut width: Option<usize> = None;
        for (i, layer) in self.layers.iter().enumerate() {
            if let Some((w, b)) = layer.weights() {
                if w.rows() == 0 || w.cols() == 0 {
                    return Err(TrainError::Config(format!("layer {i} has an empty weight matrix")));
                }
                if b.len() != w.cols() {
                    return Err(TrainError::Config(format!("layer {i}: bias length {} for {} outputs", b.len(), w.cols())));
                }
                if let Some(prev) = width {
                    if prev != w.rows() {
                        return Err(TrainError::Config(format!("layer {i} expects {} inputs, gets {prev}", w.rows())));
                    }
                }
                if let Layer::LutLinear { codebook, .. } = layer {
                    if codebook.k() != w.rows() {
                        return Err(TrainError::Config(format!("layer {i}: codebook K {} vs weights {}", codebook.k(), w.rows())));
                    }
                }
                width = Some(w.cols());
            }
        }
        Ok(())
    }

    pub fn input_width(&self) -> Option<usize> {
        self.layers.iter().find_map(|l| l.weights().map(|(w, _)| w.rows()))
    }

    pub fn parameter_count(&self) -> usize {
        self.layers.iter().map(Layer::parameter_count).sum()
    }

    pub fn lut_layers(&self) -> usize {
        self.layers.iter().filter(|l| matches!(l, Layer::LutLinear { .. })).count()
    }

    pub(crate) fn forward_cached(&self, x: &Matrix) -> Result<(Matrix, Vec<LayerCache>)> {
        let mut act = x.clone();
        let mut caches = Vec::with_capacity(self.layers.len());
        for layer in &self.layers {
            let (next, cache) = match layer {
                Layer::Dense { w, b } => {
                    check_width(&act, w)?;
                    let mut out = matmul(&act, w);
                    add_bias(&mut out, b);
                    (out, LayerCache::Linear { input: act })
                }
                Layer::LutLinear { w, b, codebook, cfg } => {
                    check_width(&act, w)?;
                    let encoded = encode(&act, codebook, cfg.metric, cfg.dist_precision)?;
                    let recon = codebook.reconstruct(&encoded)?;
                    let mut out = matmul(&recon, w);
                    add_bias(&mut out, b);
                    (out, LayerCache::Lut { input: act, recon, encoded })
                }
                Layer::Relu => {
                    let out = Matrix::from_fn(act.rows(), act.cols(), |r, c| act[(r, c)].max(0.0));
                    (out, LayerCache::Act { input: act })
                }
                Layer::Tanh => {
                    let out = Matrix::from_fn(act.rows(), act.cols(), |r, c| act[(r, c)].tanh());
                    (out, LayerCache::Act { input: act })
                }
            };
            caches.push(cache);
            act = next;
        }
        Ok((act, caches))
    }

    /// Network outputs (logits for classification). LUT layers compute
    /// `Â·W + b` with freshly encoded inputs.
    pub fn forward(&self, x: &Matrix) -> Result<Matrix> {
        Ok(self.forward_cached(x)?.0)
    }

    /// Inference through precomputed PSum tables instead of `Â·W`.
    pub fn infer_lut(&self, x: &Matrix) -> Result<Matrix> {
        let mut act = x.clone();
        for layer in &self.layers {
            act = match layer {
                Layer::LutLinear { w, b, codebook, cfg } => {
                    check_width(&act, w)?;
                    let encoded = encode(&act, codebook, cfg.metric, cfg.dist_precision)?;
                    let table = build_lut(codebook, w, cfg.lut_precision)?;
                    let mut out = lut_gemm(&encoded, &table)?;
                    add_bias(&mut out, b);
                    out
                }
                other => TinyNet { layers: vec![other.clone()], head: self.head }.forward(&act)?,
            };
        }
        Ok(act)
    }

    pub fn predict(&self, x: &Matrix) -> Result<Vec<usize>> {
        let out = self.forward(x)?;
        Ok((0..out.rows()).map(|r| argmax(out.row(r))).collect())
    }

    pub fn accuracy(&self, x: &Matrix, labels: &[usize]) -> Result<f64> {
        if labels.is_empty() {
            return Ok(0.0);
        }
        let pred = self.predict(x)?;
        Ok(pred.iter().zip(labels).filter(|(p, l)| p == l).count() as f64 / labels.len() as f64)
    }

    pub fn task_loss(&self, x: &Matrix, targets: &Targets) -> Result<f64> {
        let out = self.forward(x)?;
        Ok(head_loss(self.head, &out, targets)?.0)
    }
}

fn check_width(act: &Matrix, w: &Matrix) -> Result<()> {
    if act.cols() != w.rows() {
        return Err(TrainError::Config(format!("activation width {} vs layer input {}", act.cols(), w.rows())));
    }
    Ok(())
}

pub fn argmax(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in xs.iter().enumerate() {
        if *x > xs[best] {
            best = i;
        }
    }
    best
}

/// Mean loss over the batch and its gradient with respect to `out`.
pub(crate) fn head_loss(head: LossHead, out: &Matrix, targets: &Targets) -> Result<(f64, Matrix)> {
    let rows = out.rows().max(1) as f64;
    match (head, targets) {
        (LossHead::CrossEntropy, Targets::Classes(labels)) => {
            if labels.len() != out.rows() {
                return Err(TrainError::Config("label count does not match batch".into()));
            }
            let mut grad = Matrix::zeros(out.rows(), out.cols());
            let mut loss = 0.0;
            for (r, &label) in labels.iter().enumerate() {
                let row = out.row(r);
                let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let exps: Vec<f64> = row.iter().map(|x| (x - max).exp()).collect();
                let sum: f64 = exps.iter().sum();
                loss += sum.ln() + max - row[label];
                for (c, e) in exps.iter().enumerate() {
                    grad[(r, c)] = (e / sum - if c == label { 1.0 } else { 0.0 }) / rows;
                }
            }
            Ok((loss / rows, grad))
        }
        (LossHead::MeanSquared, Targets::Values(target)) => {
            let diff = out.sub(target).map_err(TrainError::from)?;
            let loss = diff.as_slice().iter().map(|d| d * d).sum::<f64>() / rows;
            Ok((loss, diff.scale(2.0 / rows)))
        }
        _ => Err(TrainError::Config("loss head and targets disagree".into())),
    }
}

/// `‖SG(Â·W) − A·W‖² + ‖Â·W − SG(A·W)‖²`. Both terms share the value
/// `‖Â·W − A·W‖²`; they differ only in which side receives gradient.
pub fn reconstruction_loss(a: &Matrix, a_hat: &Matrix, w: &Matrix) -> Result<f64> {
    if a.shape() != a_hat.shape() || a.cols() != w.rows() {
        return Err(TrainError::Config("reconstruction loss operands disagree in shape".into()));
    }
    let diff = matmul(&a_hat.sub(a)?, w);
    Ok(2.0 * diff.as_slice().iter().map(|d| d * d).sum::<f64>())
}

#[derive(Debug, Clone, PartialEq)]
pub enum LayerGrad {
    None,
    Linear { w: Matrix, b: Vec<f64> },
    Lut { w: Matrix, b: Vec<f64>, centroids: Vec<Matrix> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<LayerGrad>,
    /// Gradient with respect to the network input.
    pub input: Matrix,
    pub task_loss: f64,
    /// `Σ L_re` over LUT layers, each divided by its output element count.
    pub re_loss: f64,
}

/// Backward pass with the straight-through estimator.
///
/// For a LUT layer the forward output is `Â·W + b`. The gradient for `W` is
/// `Âᵀ·δ` (exact, since `Â` does not depend on `W`), and the gradient passed
/// upstream is `δ·Wᵀ` as if the quantizer were the identity. Centroids only
/// receive gradient from the reconstruction term `λ_re · L_re / (batch · N)`:
/// the `Â·W` side updates the centroids used by each row, the `A·W` side is
/// added to the upstream gradient. `W` is held constant inside `L_re`.
pub fn backward_ste(net: &TinyNet, x: &Matrix, targets: &Targets, lambda_re: f64) -> Result<Gradients> {
    let (out, caches) = net.forward_cached(x)?;
    let (task_loss, mut delta) = head_loss(net.head, &out, targets)?;
    let batch = x.rows().max(1) as f64;
    let mut re_loss = 0.0;
    let mut grads = vec![LayerGrad::None; net.layers.len()];

    for (i, (layer, cache)) in net.layers.iter().zip(&caches).enumerate().rev() {
        delta = match (layer, cache) {
            (Layer::Dense { w, .. }, LayerCache::Linear { input }) => {
                grads[i] = LayerGrad::Linear { w: matmul_tn(input, &delta), b: column_sums(&delta) };
                matmul_nt(&delta, w)
            }
            (Layer::LutLinear { w, codebook, .. }, LayerCache::Lut { input, recon, encoded }) => {
                let gw = matmul_tn(recon, &delta);
                let gb = column_sums(&delta);
                let mut upstream = matmul_nt(&delta, w);
                let residual = matmul(&recon.sub(input)?, w);
                let elems = batch * w.cols() as f64;
                re_loss += 2.0 * residual.as_slice().iter().map(|d| d * d).sum::<f64>() / elems;
                let mut centroids: Vec<Matrix> =
                    codebook.blocks().iter().map(|z| Matrix::zeros(z.rows(), z.cols())).collect();
                if lambda_re != 0.0 {
                    let coeff = 2.0 * lambda_re / elems;
                    let g_recon = matmul_nt(&residual, w).scale(coeff);
                    scatter_to_centroids(&g_recon, encoded, codebook, &mut centroids);
                    let commit = g_recon.scale(-1.0);
                    upstream = Matrix::from_vec(
                        upstream.rows(),
                        upstream.cols(),
                        upstream.as_slice().iter().zip(commit.as_slice()).map(|(u, c)| u + c).collect(),
                    )?;
                }
                grads[i] = LayerGrad::Lut { w: gw, b: gb, centroids };
                upstream
            }
            (Layer::Relu, LayerCache::Act { input }) => {
                Matrix::from_fn(delta.rows(), delta.cols(), |r, c| if input[(r, c)] > 0.0 { delta[(r, c)] } else { 0.0 })
            }
            (Layer::Tanh, LayerCache::Act { input }) => Matrix::from_fn(delta.rows(), delta.cols(), |r, c| {
                let t = input[(r, c)].tanh();
                delta[(r, c)] * (1.0 - t * t)
            }),
            _ => unreachable!("cache built from the same layer list"),
        };
    }

    if !task_loss.is_finite() || !re_loss.is_finite() {
        return Err(TrainError::NonFinite { iteration: 0, task_loss, re_loss });
    }
    Ok(Gradients { layers: grads, input: delta, task_loss, re_loss })
}

fn scatter_to_centroids(g_recon: &Matrix, encoded: &EncodedMatrix, codebook: &Codebook, out: &mut [Matrix]) {
    let v = codebook.v();
    for m in 0..encoded.rows() {
        for (k, block) in out.iter_mut().enumerate() {
            let j = encoded.get(m, k) as usize;
            for i in 0..v {
                let col = k * v + i;
                if col < codebook.k() {
                    block[(j, i)] += g_recon[(m, col)];
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use lutdla_core::SimilarityMetric;

    #[test]
    fn reconstruction_loss_values() {
        let one = |x| Matrix::from_rows(&[vec![x]]).unwrap();
        assert_eq!(reconstruction_loss(&one(1.0), &one(2.0), &one(3.0)).unwrap(), 18.0);
        let a = Matrix::from_fn(3, 2, |r, c| (r + c) as f64);
        let w = Matrix::from_fn(2, 2, |r, c| (r * 2 + c) as f64);
        assert_eq!(reconstruction_loss(&a, &a, &w).unwrap(), 0.0);
    }

    #[test]
    fn mlp_shapes_validate() {
        let net = TinyNet::mlp(&[2, 8, 3], Layer::Relu, LossHead::CrossEntropy, 1);
        assert_eq!(net.layers.len(), 3);
        net.validate().unwrap();
        assert_eq!(net.parameter_count(), 2 * 8 + 8 + 8 * 3 + 3);
        let mut broken = net.clone();
        broken.layers.swap(0, 2);
        assert!(broken.validate().is_err());
    }

    #[test]
    fn single_centroid_collapses_rows() {
        let w = Matrix::from_fn(4, 2, |r, c| (r as f64 - c as f64) * 0.5);
        let z = vec![Matrix::from_rows(&[vec![1.0, -1.0]]).unwrap(); 2];
        let codebook = Codebook::new(4, 2, z).unwrap();
        let cfg = VqConfig::new(2, 1, SimilarityMetric::L2);
        let net = TinyNet { layers: vec![Layer::LutLinear { w, b: vec![0.1, 0.2], codebook, cfg }], head: LossHead::MeanSquared };
        let x = Matrix::from_fn(5, 4, |r, c| (r * c) as f64);
        let out = net.forward(&x).unwrap();
        for r in 1..5 {
            assert_eq!(out.row(r), out.row(0));
        }
    }

    #[test]
    fn zero_penalty_leaves_centroids_without_gradient() {
        let w = Matrix::from_fn(2, 2, |r, c| (r + 2 * c) as f64 - 1.0);
        let codebook = Codebook::new(2, 2, vec![Matrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap()]).unwrap();
        let cfg = VqConfig::new(2, 2, SimilarityMetric::L1);
        let net = TinyNet { layers: vec![Layer::LutLinear { w, b: vec![0.0; 2], codebook, cfg }], head: LossHead::CrossEntropy };
        let x = Matrix::from_rows(&[vec![0.3, 0.9], vec![0.8, -0.1]]).unwrap();
        let g = backward_ste(&net, &x, &Targets::Classes(&[1, 0]), 0.0).unwrap();
        let LayerGrad::Lut { centroids, .. } = &g.layers[0] else { panic!() };
        assert!(centroids.iter().all(|z| z.as_slice().iter().all(|x| *x == 0.0)));
        let g = backward_ste(&net, &x, &Targets::Classes(&[1, 0]), 0.5).unwrap();
        let LayerGrad::Lut { centroids, .. } = &g.layers[0] else { panic!() };
        assert!(centroids.iter().any(|z| z.as_slice().iter().any(|x| *x != 0.0)));
    }
}
