// SPDX-License-Identifier: Apache-2.0

//! Replacing dense operators with LUT operators, and the staged pipeline.

use lutdla_core::{Codebook, Matrix, VqConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Result, TrainError};
use crate::net::{Layer, LayerCache, TinyNet};
use crate::stage::{train_stage, Stage, StageReport, TrainConfig, DEFAULT_LAMBDA_RE};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CodebookInit {
    /// k-means on calibration activations.
    KMeans,
    /// Gaussian draws matching per-coordinate mean and spread of the activations.
    Random,
}

/// Inputs seen by every linear layer when `x` runs through the dense network.
fn linear_inputs(net: &TinyNet, x: &Matrix) -> Result<Vec<Option<Matrix>>> {
    let (_, caches) = net.forward_cached(x)?;
    Ok(caches
        .into_iter()
        .map(|c| match c {
            LayerCache::Linear { input } | LayerCache::Lut { input, .. } => Some(input),
            LayerCache::Act { .. } => None,
        })
        .collect())
}

fn convert_with(
    net: &TinyNet,
    cfg: &VqConfig,
    calib: &Matrix,
    seed: u64,
    init: CodebookInit,
    select: impl Fn(usize) -> bool,
) -> Result<TinyNet> {
    cfg.validate()?;
    net.validate()?;
    if calib.rows() == 0 {
        return Err(TrainError::Config("calibration batch is empty".into()));
    }
    let inputs = linear_inputs(net, calib)?;
    let mut out = net.clone();
    let mut ordinal = 0usize;
    for (i, layer) in out.layers.iter_mut().enumerate() {
        let Layer::Dense { w, b } = layer else { continue };
        let this = ordinal;
        ordinal += 1;
        if !select(this) {
            continue;
        }
        let act = inputs[i].as_ref().expect("dense layers record their input");
        if act.cols() == 0 {
            return Err(TrainError::Config(format!("layer {i} has no inputs")));
        }
        let layer_seed = seed ^ (this as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15);
        let codebook = match init {
            CodebookInit::KMeans => Codebook::fit(act, cfg, layer_seed)?,
            CodebookInit::Random => random_codebook(act, cfg, layer_seed)?,
        };
        *layer = Layer::LutLinear { w: w.clone(), b: b.clone(), codebook, cfg: *cfg };
    }
    Ok(out)
}

/// Turns every dense layer into a LUT layer with k-means codebooks fit on
/// the activations the original network produces for `calib`. Weights are
/// copied unchanged.
pub fn substitute(net: &TinyNet, cfg: &VqConfig, calib: &Matrix, seed: u64) -> Result<TinyNet> {
    convert_with(net, cfg, calib, seed, CodebookInit::KMeans, |_| true)
}

/// Like [`substitute`] but only for the dense layers whose ordinal (counting
/// dense layers from 0) passes `select`.
pub fn substitute_selected(
    net: &TinyNet,
    cfg: &VqConfig,
    calib: &Matrix,
    seed: u64,
    init: CodebookInit,
    select: impl Fn(usize) -> bool,
) -> Result<TinyNet> {
    convert_with(net, cfg, calib, seed, init, select)
}

/// Substitution with randomly drawn codebooks instead of k-means.
pub fn random_codebooks(net: &TinyNet, cfg: &VqConfig, calib: &Matrix, seed: u64) -> Result<TinyNet> {
    convert_with(net, cfg, calib, seed, CodebookInit::Random, |_| true)
}

fn random_codebook(act: &Matrix, cfg: &VqConfig, seed: u64) -> Result<Codebook> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = act.cols();
    let rows = act.rows() as f64;
    let padded = cfg.subspaces(k) * cfg.v;
    let mut stats = vec![(0.0, 0.0); padded];
    for (col, s) in stats.iter_mut().enumerate().take(k) {
        let mean = (0..act.rows()).map(|r| act[(r, col)]).sum::<f64>() / rows;
        let var = (0..act.rows()).map(|r| (act[(r, col)] - mean).powi(2)).sum::<f64>() / rows;
        *s = (mean, var.sqrt());
    }
    let blocks = (0..cfg.subspaces(k))
        .map(|s| {
            Matrix::from_fn(cfg.c, cfg.v, |_, i| {
                let (mean, sd) = stats[s * cfg.v + i];
                if sd > 0.0 {
                    Normal::new(mean, sd).expect("finite spread").sample(&mut rng)
                } else {
                    mean
                }
            })
        })
        .collect();
    Ok(Codebook::new(k, cfg.v, blocks)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Pipeline {
    pub lr: f64,
    /// Learning rate of the centroid-only stage. Centroids only see the
    /// reconstruction term, so its gradients are scaled by `λ_re`.
    #[serde(default)]
    pub centroid_lr: Option<f64>,
    pub centroid_iters: usize,
    pub joint_iters: usize,
    #[serde(default = "default_lambda")]
    pub lambda_re: f64,
    #[serde(default = "default_batch")]
    pub batch_size: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_lambda() -> f64 {
    DEFAULT_LAMBDA_RE
}

fn default_batch() -> usize {
    32
}

impl Pipeline {
    fn stage(&self, stage: Stage, iterations: usize, seed: u64) -> TrainConfig {
        let lr = match stage {
            Stage::CentroidOnly => self.centroid_lr.unwrap_or(self.lr),
            Stage::Joint => self.lr,
        };
        TrainConfig { stage, lr, iterations, lambda_re: self.lambda_re, seed, batch_size: self.batch_size }
    }
}

#[derive(Debug, Clone)]
pub struct Conversion {
    pub net: TinyNet,
    pub centroid_stage: Option<StageReport>,
    pub joint_stage: StageReport,
}

/// Substitution, centroid-only training, then joint training.
pub fn multistage(dense: &TinyNet, cfg: &VqConfig, train: &Dataset, val: &Dataset, plan: &Pipeline) -> Result<Conversion> {
    let mut net = substitute(dense, cfg, &train.x, plan.seed)?;
    let centroid = train_stage(&mut net, train, val, &plan.stage(Stage::CentroidOnly, plan.centroid_iters, plan.seed))?;
    let joint = train_stage(&mut net, train, val, &plan.stage(Stage::Joint, plan.joint_iters, plan.seed.wrapping_add(1)))?;
    Ok(Conversion { net, centroid_stage: Some(centroid), joint_stage: joint })
}

/// Joint training only, for the same total number of iterations.
pub fn single_stage(
    dense: &TinyNet,
    cfg: &VqConfig,
    train: &Dataset,
    val: &Dataset,
    plan: &Pipeline,
    init: CodebookInit,
) -> Result<Conversion> {
    let mut net = convert_with(dense, cfg, &train.x, plan.seed, init, |_| true)?;
    let iters = plan.centroid_iters + plan.joint_iters;
    let joint = train_stage(&mut net, train, val, &plan.stage(Stage::Joint, iters, plan.seed.wrapping_add(1)))?;
    Ok(Conversion { net, centroid_stage: None, joint_stage: joint })
}
