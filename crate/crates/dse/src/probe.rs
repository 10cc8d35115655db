// SPDX-License-Identifier: Apache-2.0

//! Accuracy estimates for the third search step.

use lutdla_core::VqConfig;
use lutdla_train::{
    digits, quick_accuracy_probe, substitute, train_stage, two_moons, Dataset, Layer, LossHead, Stage, TinyNet, TrainConfig,
};

use crate::error::Result;

pub trait AccuracyProbe {
    /// Estimated accuracy in `[0, 1]` of a model quantized with `cfg`.
    fn accuracy(&mut self, cfg: &VqConfig) -> Result<f64>;
}

impl<F: FnMut(&VqConfig) -> Result<f64>> AccuracyProbe for F {
    fn accuracy(&mut self, cfg: &VqConfig) -> Result<f64> {
        self(cfg)
    }
}

/// Probe backed by a small pretrained network on a bundled toy task.
///
/// This stands in for a model-specific probe: the accuracies it returns
/// describe the toy task, not the GEMM shape being searched.
#[derive(Debug, Clone)]
pub struct ToyProbe {
    pub dense: TinyNet,
    pub train: Dataset,
    pub val: Dataset,
    pub budget: usize,
    pub lr: f64,
    pub seed: u64,
}

impl ToyProbe {
    fn pretrained(data: Dataset, widths: &[usize], budget: usize, seed: u64) -> Result<Self> {
        let (train, val) = data.split(0.7, seed);
        let mut dense = TinyNet::mlp(widths, Layer::Tanh, LossHead::CrossEntropy, seed);
        train_stage(&mut dense, &train, &val, &TrainConfig::new(Stage::Joint, 0.3, 1500, seed))?;
        Ok(Self { dense, train, val, budget, lr: 0.5, seed })
    }

    /// MLP 2-16-16-2 on two interleaved half circles.
    pub fn two_moons(budget: usize, seed: u64) -> Result<Self> {
        Self::pretrained(two_moons(600, 0.15, seed), &[2, 16, 16, 2], budget, seed)
    }

    /// MLP 64-32-10 on the bundled 8x8 digits.
    pub fn digits(budget: usize, seed: u64) -> Result<Self> {
        Self::pretrained(digits(&[0, 1, 2, 3, 4, 5, 6, 7, 8, 9]), &[64, 32, 10], budget, seed)
    }
}

impl AccuracyProbe for ToyProbe {
    fn accuracy(&mut self, cfg: &VqConfig) -> Result<f64> {
        let net = substitute(&self.dense, cfg, &self.train.x, self.seed)?;
        Ok(quick_accuracy_probe(&net, &self.train, &self.val, self.budget, self.lr, self.seed)?)
    }
}
