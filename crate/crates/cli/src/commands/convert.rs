// SPDX-License-Identifier: Apache-2.0

use std::path::{Path, PathBuf};

use lutdla_core::{Codebook, VqConfig};
use lutdla_train::{
    checkpoint, digits, substitute, train_stage, two_moons, Dataset, Layer, LossHead, Stage, StageReport, TinyNet,
    TrainConfig,
};
use serde::Serialize;
use serde_json::Value;

use crate::config::{ConvertConfig, Task};
use crate::error::{CliError, Result};
use crate::output::{OutDir, Provenance};
use crate::Context;

#[derive(Debug, Serialize)]
struct Summary {
    task: Task,
    train_samples: usize,
    val_samples: usize,
    vq: VqConfig,
    lut_layers: usize,
    parameters: usize,
    dense_accuracy: f64,
    substituted_accuracy: f64,
    centroid_stage_accuracy: Option<f64>,
    final_accuracy: f64,
    /// Largest centroid coordinate change made by the centroid stage.
    centroid_shift: f64,
    final_task_loss: Option<f64>,
    final_re_loss: Option<f64>,
}

fn check(cfg: &ConvertConfig) -> Result<()> {
    cfg.vq.validate()?;
    if !(cfg.split > 0.0 && cfg.split < 1.0) {
        return Err(CliError::input(format!("split must lie in (0, 1), got {}", cfg.split)));
    }
    if cfg.task == Task::TwoMoons && cfg.samples < 4 {
        return Err(CliError::input("two-moons needs at least 4 samples"));
    }
    if !(cfg.noise >= 0.0) {
        return Err(CliError::input("noise must be >= 0"));
    }
    Ok(())
}

fn dataset(cfg: &ConvertConfig, seed: u64) -> Dataset {
    match cfg.task {
        Task::TwoMoons => two_moons(cfg.samples, cfg.noise, seed),
        Task::Digits => digits(&[0, 1, 2, 3, 4, 5, 6, 7, 8, 9]),
    }
}

fn dense_model(ctx: &Context, cfg: &ConvertConfig, train: &Dataset, val: &Dataset) -> Result<TinyNet> {
    if let Some(path) = &cfg.model {
        let net = checkpoint::load(path).map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
        if net.input_width() != Some(train.features()) {
            return Err(CliError::input(format!(
                "model expects {:?} inputs, task has {}",
                net.input_width(),
                train.features()
            )));
        }
        return Ok(net);
    }
    let hidden = cfg.hidden.clone().unwrap_or_else(|| match cfg.task {
        Task::TwoMoons => vec![16, 16],
        Task::Digits => vec![32],
    });
    let mut widths = vec![train.features()];
    widths.extend(hidden);
    widths.push(train.classes);
    let mut net = TinyNet::mlp(&widths, Layer::Tanh, LossHead::CrossEntropy, ctx.seed);
    ctx.log(format!("pretraining dense {widths:?} for {} iterations", cfg.pretrain_iters));
    train_stage(&mut net, train, val, &TrainConfig::new(Stage::Joint, cfg.pretrain_lr, cfg.pretrain_iters, ctx.seed))?;
    Ok(net)
}

fn codebooks(net: &TinyNet) -> Vec<&Codebook> {
    net.layers
        .iter()
        .filter_map(|l| match l {
            Layer::LutLinear { codebook, .. } => Some(codebook),
            _ => None,
        })
        .collect()
}

fn max_shift(before: &[&Codebook], after: &[&Codebook]) -> f64 {
    before
        .iter()
        .zip(after)
        .flat_map(|(a, b)| a.blocks().iter().zip(b.blocks()))
        .flat_map(|(za, zb)| za.as_slice().iter().zip(zb.as_slice()).map(|(x, y)| (x - y).abs()))
        .fold(0.0, f64::max)
}

fn curve_csv(report: &StageReport) -> Result<String> {
    let mut buf = Vec::new();
    report.write_csv(&mut buf)?;
    String::from_utf8(buf).map_err(CliError::internal)
}

pub fn run(ctx: &Context, model: Option<&Path>) -> Result<Vec<PathBuf>> {
    let mut cfg = ctx.cfg.convert.clone().unwrap_or_default();
    cfg.model = match (model, &cfg.model) {
        (Some(m), _) => Some(m.to_path_buf()),
        (None, Some(m)) => Some(ctx.cfg.resolve(m)),
        (None, None) => None,
    };
    check(&cfg)?;
    let prov = Provenance::new("convert", &cfg, ctx.seed)?;

    let (train, val) = dataset(&cfg, ctx.seed).split(cfg.split, ctx.seed);
    let dense = dense_model(ctx, &cfg, &train, &val)?;
    let dense_accuracy = dense.accuracy(&val.x, &val.labels)?;

    // the steps of `lutdla_train::multistage`, one at a time to keep the intermediate nets
    let mut net = substitute(&dense, &cfg.vq, &train.x, ctx.seed)?;
    let substituted_accuracy = net.accuracy(&val.x, &val.labels)?;
    ctx.log(format!("dense accuracy {dense_accuracy:.4}, after substitution {substituted_accuracy:.4}"));
    let initial = net.clone();

    let stage = |stage, lr, iterations, seed| TrainConfig { stage, lr, iterations, lambda_re: cfg.lambda_re, seed, batch_size: cfg.batch_size };
    let centroid = train_stage(&mut net, &train, &val, &stage(Stage::CentroidOnly, cfg.centroid_lr.unwrap_or(cfg.lr), cfg.centroid_iters, ctx.seed))?;
    let centroid_shift = max_shift(&codebooks(&initial), &codebooks(&net));
    ctx.log(format!("centroid stage moved centroids by at most {centroid_shift:.3e}"));
    let joint = train_stage(&mut net, &train, &val, &stage(Stage::Joint, cfg.lr, cfg.joint_iters, ctx.seed.wrapping_add(1)))?;

    let final_accuracy = net.accuracy(&val.x, &val.labels)?;
    ctx.log(format!("final accuracy {final_accuracy:.4}"));
    let summary = Summary {
        task: cfg.task,
        train_samples: train.len(),
        val_samples: val.len(),
        vq: cfg.vq,
        lut_layers: net.lut_layers(),
        parameters: net.parameter_count(),
        dense_accuracy,
        substituted_accuracy,
        centroid_stage_accuracy: centroid.final_accuracy(),
        final_accuracy,
        centroid_shift,
        final_task_loss: joint.task_loss.last().copied(),
        final_re_loss: joint.re_loss.last().copied(),
    };

    let mut out = OutDir::create(&ctx.out, prov)?;
    let mut container = checkpoint::to_container(&net)?;
    if let Value::Object(meta) = &mut container.meta {
        meta.insert("provenance".into(), out.provenance().to_value());
    }
    let ckpt = out.path("checkpoint.ldla");
    container.save(&ckpt)?;
    out.register(ckpt);
    out.text("centroid_stage.csv", &curve_csv(&centroid)?)?;
    out.text("joint_stage.csv", &curve_csv(&joint)?)?;
    out.json("convert_summary.json", &summary)?;
    Ok(out.written)
}
