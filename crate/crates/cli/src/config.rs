// SPDX-License-Identifier: Apache-2.0

//! The TOML run configuration. Each subcommand reads its own table; a
//! missing table means the built-in defaults. Unknown keys are rejected.

use std::fs;
use std::path::{Path, PathBuf};

use lutdla_core::dataflow::{BitWidths, TileConfig};
use lutdla_core::{LutPrecision, ProblemShape, SimilarityMetric, VqConfig};
use lutdla_dse::{Constraints, ModelOptions, SearchSpace};
use lutdla_sim::HwConfig;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

pub const DEFAULT_SEED: u64 = 0;
pub const DEFAULT_OUT: &str = "lutdla-out";

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub convert: Option<ConvertConfig>,
    pub amm: Option<AmmConfig>,
    pub simulate: Option<SimulateConfig>,
    pub dataflow: Option<DataflowConfig>,
    pub dse: Option<DseConfig>,
    /// Directory of the config file; relative paths inside it resolve here.
    #[serde(skip)]
    pub base: Option<PathBuf>,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| CliError::input(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::input(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::parse(&text)?;
        cfg.base = path.parent().map(Path::to_path_buf);
        Ok(cfg)
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        match &self.base {
            Some(base) if p.is_relative() => base.join(p),
            _ => p.to_path_buf(),
        }
    }
}

fn paper_shape() -> ProblemShape {
    ProblemShape { m: 512, k: 768, n: 768 }
}

fn paper_vq() -> VqConfig {
    VqConfig { lut_precision: LutPrecision::Int8, ..VqConfig::new(4, 32, SimilarityMetric::L2) }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    #[default]
    TwoMoons,
    Digits,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConvertConfig {
    pub task: Task,
    /// Two-moons sample count and noise; ignored for digits.
    pub samples: usize,
    pub noise: f64,
    /// Fraction of samples used for training.
    pub split: f64,
    /// Hidden widths of the dense MLP trained when no model is given.
    pub hidden: Option<Vec<usize>>,
    pub pretrain_iters: usize,
    pub pretrain_lr: f64,
    /// Dense checkpoint to convert instead of pretraining one.
    pub model: Option<PathBuf>,
    pub vq: VqConfig,
    pub lr: f64,
    pub centroid_lr: Option<f64>,
    pub centroid_iters: usize,
    pub joint_iters: usize,
    pub lambda_re: f64,
    pub batch_size: usize,
}

impl Default for ConvertConfig {
    fn default() -> Self {
        Self {
            task: Task::TwoMoons,
            samples: 400,
            noise: 0.15,
            split: 0.7,
            hidden: None,
            pretrain_iters: 800,
            pretrain_lr: 0.3,
            model: None,
            vq: VqConfig::new(2, 8, SimilarityMetric::L2),
            lr: 0.05,
            centroid_lr: Some(0.5),
            centroid_iters: 200,
            joint_iters: 200,
            lambda_re: lutdla_train::DEFAULT_LAMBDA_RE,
            batch_size: 32,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AmmConfig {
    pub a: Option<PathBuf>,
    pub b: Option<PathBuf>,
    pub vq: VqConfig,
    /// Extra centroid counts to fit and report alongside `vq.c`.
    pub c_sweep: Vec<usize>,
    /// Output file name; `.csv` or the binary container otherwise.
    pub output: String,
    pub bit_out: u32,
}

impl Default for AmmConfig {
    fn default() -> Self {
        Self {
            a: None,
            b: None,
            vq: VqConfig::new(4, 16, SimilarityMetric::L2),
            c_sweep: Vec::new(),
            output: "amm_output.csv".into(),
            bit_out: 32,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulateConfig {
    pub shape: ProblemShape,
    pub vq: VqConfig,
    /// Defaults to one CCU with a dPE per centroid, one IMM with 16 lanes,
    /// 16-column tiles and all rows resident.
    pub hw: Option<HwConfig>,
    /// Also run on seeded random operands and compare with the reference.
    pub functional: bool,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        Self { shape: paper_shape(), vq: paper_vq(), hw: None, functional: false }
    }
}

impl SimulateConfig {
    pub fn hardware(&self) -> HwConfig {
        self.hw.unwrap_or_else(|| HwConfig::new(&self.shape, &self.vq, 16, 16))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DataflowConfig {
    pub shape: ProblemShape,
    pub vq: VqConfig,
    pub tile: TileConfig,
    /// Defaults to 8-bit tables and outputs, 16-bit partial sums and
    /// `⌈log2 c⌉`-bit indices.
    pub bits: Option<BitWidths>,
}

impl Default for DataflowConfig {
    fn default() -> Self {
        Self { shape: paper_shape(), vq: paper_vq(), tile: TileConfig::new(16, 512), bits: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbeTask {
    #[default]
    None,
    TwoMoons,
    Digits,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DseConfig {
    pub shape: ProblemShape,
    pub space: SearchSpace,
    pub constraints: Option<Constraints>,
    /// JSON cost tables; the bundled synthetic tables otherwise.
    pub cost_tables: Option<PathBuf>,
    pub model: ModelOptions,
    pub probe: ProbeTask,
    pub probe_budget: usize,
}

impl Default for DseConfig {
    fn default() -> Self {
        let mut space = SearchSpace::new(vec![2, 4], vec![8, 16, 32], vec![1, 2], vec![1, 2]);
        space.max_n_imm = Some(8);
        Self {
            shape: paper_shape(),
            space,
            constraints: None,
            cost_tables: None,
            model: ModelOptions::default(),
            probe: ProbeTask::None,
            probe_budget: 20,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_is_all_defaults() {
        assert_eq!(RunConfig::parse("").unwrap(), RunConfig::default());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        for text in ["sede = 1", "[convert]\nlearning_rate = 0.1", "[simulate.hw]\nn_ccu = 1\ndpes = 1\nn_imm = 1\nlut_banks = 16\ntile = { t_n = 16, m_tile = 8 }\nspeed = 2"] {
            let err = RunConfig::parse(text).unwrap_err();
            assert_eq!(err.exit_code(), 2, "{text}");
        }
    }

    #[test]
    fn sections_parse() {
        let cfg = RunConfig::parse(
            r#"
            seed = 5
            [amm]
            vq = { v = 4, c = 16, metric = "L1", lut_precision = "Int8" }
            c_sweep = [2, 4, 8]
            [dse.space]
            v = [2]
            c = [8]
            n_ccu = [1]
            n_imm = [1]
            beta = [64.0]
            [dse.constraints]
            max_tau_ratio = 0.5
            max_phi_ratio = inf
            max_area = inf
            max_power = inf
            "#,
        )
        .unwrap();
        assert_eq!(cfg.seed, Some(5));
        let amm = cfg.amm.unwrap();
        assert_eq!(amm.vq.metric, SimilarityMetric::L1);
        assert_eq!(amm.c_sweep, [2, 4, 8]);
        let dse = cfg.dse.unwrap();
        assert_eq!(dse.space.beta, [64.0]);
        assert_eq!(dse.constraints.unwrap().max_tau_ratio, 0.5);
        assert_eq!(dse.shape, paper_shape());
    }

    #[test]
    fn relative_paths_follow_the_config_file() {
        let cfg = RunConfig { base: Some(PathBuf::from("/data/run")), ..RunConfig::default() };
        assert_eq!(cfg.resolve(Path::new("a.csv")), PathBuf::from("/data/run/a.csv"));
        assert_eq!(cfg.resolve(Path::new("/abs/a.csv")), PathBuf::from("/abs/a.csv"));
    }
}
