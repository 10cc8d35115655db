// SPDX-License-Identifier: Apache-2.0

use std::path::PathBuf;

use lutdla_core::{Codebook, Matrix, ProblemShape, VqConfig};
use lutdla_sim::{replay_functional, simulate, steady_state_check, HwConfig, SimTrace, SteadyState};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::error::{CliError, Result};
use crate::output::{OutDir, Provenance};
use crate::Context;

#[derive(Debug, Serialize)]
struct Functional {
    /// Output bit-identical to the LUT-stationary reference executor.
    matches_reference: bool,
    total_cycles: u64,
}

#[derive(Debug, Serialize)]
struct Report<'a> {
    shape: ProblemShape,
    vq: VqConfig,
    hw: HwConfig,
    /// `⌈M·N_c·N / (lanes·n_imm)⌉`: no schedule does fewer lookup cycles.
    lookup_lower_bound: u64,
    steady_state: SteadyState,
    functional: Option<Functional>,
    trace: &'a SimTrace,
}

fn gaussian(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| StandardNormal.sample(rng))
}

pub fn run(ctx: &Context) -> Result<Vec<PathBuf>> {
    let cfg = ctx.cfg.simulate.clone().unwrap_or_default();
    let mut hw = cfg.hardware();
    hw.trace = hw.trace || ctx.verbose;
    let prov = Provenance::new("simulate", &(&cfg, &hw), ctx.seed)?;

    let mut trace = simulate(&cfg.shape, &cfg.vq, &hw)?;
    ctx.log(format!("{} cycles, bottleneck {}", trace.total_cycles, trace.bottleneck.label()));
    let steady_state = steady_state_check(&trace, &hw, &cfg.shape, &cfg.vq)?;
    let n_c = cfg.vq.subspaces(cfg.shape.k) as u64;
    let lookups = cfg.shape.m as u64 * n_c * cfg.shape.n as u64;
    let lookup_lower_bound = lookups.div_ceil((hw.lut_banks * hw.n_imm) as u64);

    let functional = if cfg.functional {
        let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
        let a = gaussian(cfg.shape.m, cfg.shape.k, &mut rng);
        let b = gaussian(cfg.shape.k, cfg.shape.n, &mut rng);
        let codebook = Codebook::fit(&a, &cfg.vq, ctx.seed)?;
        let quiet = HwConfig { trace: false, ..hw };
        let (t, _) = replay_functional(&a, &b, &codebook, &cfg.vq, &quiet)?;
        if t.total_cycles != trace.total_cycles {
            return Err(CliError::internal(format!(
                "functional run took {} cycles, timing run {}",
                t.total_cycles, trace.total_cycles
            )));
        }
        Some(Functional { matches_reference: true, total_cycles: t.total_cycles })
    } else {
        None
    };

    let mut out = OutDir::create(&ctx.out, prov)?;
    if hw.trace {
        let mut lines = Vec::new();
        trace.write_events(&mut lines)?;
        out.text("sim_events.jsonl", &String::from_utf8(lines).map_err(CliError::internal)?)?;
        trace.events.clear();
    }
    let report = Report { shape: cfg.shape, vq: cfg.vq, hw, lookup_lower_bound, steady_state, functional, trace: &trace };
    out.json("sim_trace.json", &report)?;
    Ok(out.written)
}
