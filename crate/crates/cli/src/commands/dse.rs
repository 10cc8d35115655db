// SPDX-License-Identifier: Apache-2.0

use std::fmt::Write;
use std::fs;
use std::path::PathBuf;

use lutdla_core::VqConfig;
use lutdla_dse::{heatmap_csv, search, AccuracyProbe, Constraints, CostTables, DseError, SearchReport, SearchSpace, ToyProbe};
use serde::Serialize;

use crate::config::{DseConfig, ProbeTask};
use crate::error::{CliError, Result};
use crate::output::{OutDir, Provenance};
use crate::Context;

#[derive(Debug, Serialize)]
struct Report<'a> {
    space: &'a SearchSpace,
    constraints: &'a Constraints,
    #[serde(flatten)]
    search: &'a SearchReport,
}

fn probe(cfg: &DseConfig, seed: u64) -> Result<Box<dyn AccuracyProbe>> {
    Ok(match cfg.probe {
        ProbeTask::TwoMoons => Box::new(ToyProbe::two_moons(cfg.probe_budget, seed)?),
        ProbeTask::Digits => Box::new(ToyProbe::digits(cfg.probe_budget, seed)?),
        ProbeTask::None => Box::new(|_: &VqConfig| -> lutdla_dse::Result<f64> {
            Err(DseError::Config("an accuracy bound needs a probe task".into()))
        }),
    })
}

pub fn ranking_csv(report: &SearchReport) -> String {
    let mut csv = String::from(
        "rank,v,c,metric,dist_precision,lut_precision,n_ccu,n_imm,lut_banks,t_n,beta,omega,binding,area,power,tau_ratio,phi_ratio,accuracy\n",
    );
    for (i, e) in report.ranking.iter().enumerate() {
        let p = &e.point;
        let opt = |x: Option<f64>| x.map(|x| x.to_string()).unwrap_or_default();
        let _ = writeln!(
            csv,
            "{},{},{},{:?},{:?},{:?},{},{},{},{},{},{},{},{},{},{},{},{}",
            i + 1,
            p.v,
            p.c,
            p.metric,
            p.dist_precision,
            p.lut_precision,
            p.n_ccu,
            p.n_imm,
            p.lut_banks,
            p.t_n,
            opt(p.beta),
            e.omega.cycles,
            e.omega.binding.label(),
            e.cost.area,
            e.cost.power,
            e.tau_ratio,
            e.phi_ratio,
            opt(e.accuracy)
        );
    }
    csv
}

pub fn run(ctx: &Context) -> Result<Vec<PathBuf>> {
    let mut cfg = ctx.cfg.dse.clone().unwrap_or_default();
    cfg.cost_tables = cfg.cost_tables.as_deref().map(|p| ctx.cfg.resolve(p));
    let cons = cfg.constraints.clone().unwrap_or_else(Constraints::unbounded);
    if cons.min_accuracy.is_some() && cfg.probe == ProbeTask::None {
        return Err(CliError::input("constraints.min_accuracy needs dse.probe = \"two_moons\" or \"digits\""));
    }
    let tables = match &cfg.cost_tables {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
            CostTables::from_json(&text)?
        }
        None => CostTables::default(),
    };
    let prov = Provenance::new("dse", &(&cfg, &cons, &tables), ctx.seed)?;

    let mut probe = probe(&cfg, ctx.seed)?;
    let report = search(&cfg.shape, &cfg.space, &cons, &tables, probe.as_mut(), cfg.model)?;
    for s in &report.steps {
        ctx.log(format!("step {} ({}): {} -> {}", s.step, s.name, s.input, s.survivors));
    }

    let mut out = OutDir::create(&ctx.out, prov)?;
    out.json("dse_report.json", &Report { space: &cfg.space, constraints: &cons, search: &report })?;
    out.text("dse_ranking.csv", &ranking_csv(&report))?;
    out.text("dse_heatmap.csv", &heatmap_csv(&report, &cfg.space))?;
    if let Some(inf) = &report.infeasible {
        return Err(CliError::Infeasible(format!("{} (report in {})", inf.message, ctx.out.display())));
    }
    Ok(out.written)
}
