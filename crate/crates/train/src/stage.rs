// SPDX-License-Identifier: Apache-2.0

//! SGD training stages for converted networks.

use std::io::Write;
use std::time::{Duration, Instant};

use lutdla_core::Matrix;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Result, TrainError};
use crate::linalg::axpy;
use crate::net::{backward_ste, Layer, LayerGrad, LossHead, Targets, TinyNet};

pub const DEFAULT_LAMBDA_RE: f64 = 0.05;
const DIVERGENCE_LIMIT: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Stage {
    /// Only codebook centroids move.
    CentroidOnly,
    /// Centroids, weights and biases move together.
    Joint,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub stage: Stage,
    pub lr: f64,
    pub iterations: usize,
    #[serde(default = "default_lambda")]
    pub lambda_re: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_batch")]
    pub batch_size: usize,
}

fn default_lambda() -> f64 {
    DEFAULT_LAMBDA_RE
}

fn default_batch() -> usize {
    32
}

impl TrainConfig {
    pub fn new(stage: Stage, lr: f64, iterations: usize, seed: u64) -> Self {
        Self { stage, lr, iterations, lambda_re: DEFAULT_LAMBDA_RE, seed, batch_size: default_batch() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lr > 0.0) || !self.lr.is_finite() {
            return Err(TrainError::Config(format!("learning rate must be positive, got {}", self.lr)));
        }
        if !(self.lambda_re >= 0.0) || !self.lambda_re.is_finite() {
            return Err(TrainError::Config(format!("reconstruction penalty must be >= 0, got {}", self.lambda_re)));
        }
        if self.batch_size == 0 {
            return Err(TrainError::Config("batch size must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StageReport {
    pub task_loss: Vec<f64>,
    pub re_loss: Vec<f64>,
    pub val_acc: Vec<f64>,
    pub wall_time: Duration,
}

impl StageReport {
    pub fn len(&self) -> usize {
        self.task_loss.len()
    }

    pub fn is_empty(&self) -> bool {
        self.task_loss.is_empty()
    }

    pub fn final_accuracy(&self) -> Option<f64> {
        self.val_acc.last().copied()
    }

    /// Writes `iter,task_loss,re_loss,val_acc` rows.
    pub fn write_csv(&self, mut w: impl Write) -> std::io::Result<()> {
        writeln!(w, "iter,task_loss,re_loss,val_acc")?;
        for i in 0..self.len() {
            writeln!(w, "{},{},{},{}", i, self.task_loss[i], self.re_loss[i], self.val_acc[i])?;
        }
        Ok(())
    }
}

/// Targets matching the network's loss head. MSE heads regress one-hot rows.
pub fn targets_for(head: LossHead, data: &Dataset) -> TargetBuf<'_> {
    match head {
        LossHead::CrossEntropy => TargetBuf::Classes(&data.labels),
        LossHead::MeanSquared => TargetBuf::Values(Matrix::from_fn(data.len(), data.classes, |r, c| {
            if data.labels[r] == c {
                1.0
            } else {
                0.0
            }
        })),
    }
}

pub enum TargetBuf<'a> {
    Classes(&'a [usize]),
    Values(Matrix),
}

impl TargetBuf<'_> {
    pub fn view(&self) -> Targets<'_> {
        match self {
            TargetBuf::Classes(l) => Targets::Classes(l),
            TargetBuf::Values(m) => Targets::Values(m),
        }
    }
}

/// Runs one stage of plain SGD and records per-iteration curves.
///
/// Minibatches come from a seeded shuffle that is redrawn every epoch. The
/// optimized objective is `task + λ_re · Σ L_re`, with each `L_re` averaged
/// over the layer's output elements.
pub fn train_stage(net: &mut TinyNet, train: &Dataset, val: &Dataset, cfg: &TrainConfig) -> Result<StageReport> {
    cfg.validate()?;
    net.validate()?;
    if train.is_empty() {
        return Err(TrainError::Config("training set is empty".into()));
    }
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut cursor = order.len();
    let batch = cfg.batch_size.min(train.len());
    let mut report = StageReport::default();

    for it in 0..cfg.iterations {
        if cursor + batch > order.len() {
            order.shuffle(&mut rng);
            cursor = 0;
        }
        let mb = train.subset(&order[cursor..cursor + batch]);
        cursor += batch;
        let targets = targets_for(net.head, &mb);
        let grads = match backward_ste(net, &mb.x, &targets.view(), cfg.lambda_re) {
            Ok(g) => g,
            Err(TrainError::NonFinite { task_loss, re_loss, .. }) => {
                return Err(TrainError::NonFinite { iteration: it, task_loss, re_loss })
            }
            Err(e) => return Err(e),
        };
        let total = grads.task_loss + cfg.lambda_re * grads.re_loss;
        report.task_loss.push(grads.task_loss);
        report.re_loss.push(grads.re_loss);
        if total > DIVERGENCE_LIMIT {
            report.val_acc.push(f64::NAN);
            report.wall_time = start.elapsed();
            return Err(TrainError::Diverged { iteration: it, loss: total, report: Box::new(report) });
        }
        apply(net, &grads.layers, cfg.stage, cfg.lr);
        report.val_acc.push(net.accuracy(&val.x, &val.labels)?);
    }
    report.wall_time = start.elapsed();
    Ok(report)
}

fn apply(net: &mut TinyNet, grads: &[LayerGrad], stage: Stage, lr: f64) {
    for (layer, grad) in net.layers.iter_mut().zip(grads) {
        match (layer, grad) {
            (Layer::Dense { w, b }, LayerGrad::Linear { w: gw, b: gb }) => {
                if stage == Stage::Joint {
                    axpy(w.as_mut_slice(), -lr, gw.as_slice());
                    axpy(b, -lr, gb);
                }
            }
            (Layer::LutLinear { w, b, codebook, .. }, LayerGrad::Lut { w: gw, b: gb, centroids }) => {
                for (k, gz) in centroids.iter().enumerate() {
                    axpy(codebook.subspace_mut(k).as_mut_slice(), -lr, gz.as_slice());
                }
                if stage == Stage::Joint {
                    axpy(w.as_mut_slice(), -lr, gw.as_slice());
                    axpy(b, -lr, gb);
                }
            }
            _ => {}
        }
    }
}

/// Short centroid-only run on a copy of `net`; returns validation accuracy.
pub fn quick_accuracy_probe(net: &TinyNet, train: &Dataset, val: &Dataset, budget: usize, lr: f64, seed: u64) -> Result<f64> {
    if budget == 0 {
        return Err(TrainError::Config("probe budget must be >= 1".into()));
    }
    let mut probe = net.clone();
    let cfg = TrainConfig::new(Stage::CentroidOnly, lr, budget, seed);
    let report = train_stage(&mut probe, train, val, &cfg)?;
    Ok(report.final_accuracy().unwrap_or(0.0))
}
