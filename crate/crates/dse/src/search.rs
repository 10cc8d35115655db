// SPDX-License-Identifier: Apache-2.0

//! Four-step co-design search.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt::Write as _;

use lutdla_core::{DistPrecision, LutPrecision, ProblemShape, SimilarityMetric, VqConfig};
use serde::{Deserialize, Serialize};

use crate::cost::{area_power, AreaPower, CostTables};
use crate::error::{config, Result};
use crate::model::{dense_baseline, omega_with, phi, tau_with, Bound, LoadModel, Omega, Phi, Tau, TauVariant};
use crate::point::DesignPoint;
use crate::probe::AccuracyProbe;

const DEFAULT_MAX_N_IMM: usize = 1024;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchSpace {
    pub v: Vec<usize>,
    pub c: Vec<usize>,
    #[serde(default = "default_metrics")]
    pub metrics: Vec<SimilarityMetric>,
    #[serde(default = "default_dist")]
    pub dist_precision: Vec<DistPrecision>,
    #[serde(default = "default_lut")]
    pub lut_precision: Vec<LutPrecision>,
    pub n_ccu: Vec<usize>,
    pub n_imm: Vec<usize>,
    #[serde(default = "default_lanes")]
    pub lut_banks: Vec<usize>,
    #[serde(default = "default_tn")]
    pub t_n: Vec<usize>,
    /// Bandwidth choices in bits per cycle; an empty list means unconstrained.
    #[serde(default)]
    pub beta: Vec<f64>,
    /// Upper bound on IMMs reachable by parallelism expansion.
    #[serde(default)]
    pub max_n_imm: Option<usize>,
}

fn default_metrics() -> Vec<SimilarityMetric> {
    vec![SimilarityMetric::L2]
}

fn default_dist() -> Vec<DistPrecision> {
    vec![DistPrecision::Fp32]
}

fn default_lut() -> Vec<LutPrecision> {
    vec![LutPrecision::Int8]
}

fn default_lanes() -> Vec<usize> {
    vec![16]
}

fn default_tn() -> Vec<usize> {
    vec![16]
}

impl SearchSpace {
    pub fn new(v: Vec<usize>, c: Vec<usize>, n_ccu: Vec<usize>, n_imm: Vec<usize>) -> Self {
        Self {
            v,
            c,
            metrics: default_metrics(),
            dist_precision: default_dist(),
            lut_precision: default_lut(),
            n_ccu,
            n_imm,
            lut_banks: default_lanes(),
            t_n: default_tn(),
            beta: Vec::new(),
            max_n_imm: None,
        }
    }

    /// Every point of the space in a fixed nesting order.
    pub fn points(&self) -> Vec<DesignPoint> {
        let betas: Vec<Option<f64>> = if self.beta.is_empty() { vec![None] } else { self.beta.iter().map(|b| Some(*b)).collect() };
        let mut out = Vec::new();
        for &v in &self.v {
            for &c in &self.c {
                for &metric in &self.metrics {
                    for &dist_precision in &self.dist_precision {
                        for &lut_precision in &self.lut_precision {
                            for &n_ccu in &self.n_ccu {
                                for &n_imm in &self.n_imm {
                                    for &lut_banks in &self.lut_banks {
                                        for &t_n in &self.t_n {
                                            for &beta in &betas {
                                                out.push(DesignPoint { v, c, metric, dist_precision, lut_precision, n_ccu, n_imm, lut_banks, t_n, beta });
                                            }
                                        }
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let lists = [&self.v, &self.c, &self.n_ccu, &self.n_imm, &self.lut_banks, &self.t_n];
        if lists.iter().any(|l| l.is_empty()) || self.metrics.is_empty() || self.dist_precision.is_empty() || self.lut_precision.is_empty() {
            return Err(config("search space has an empty dimension"));
        }
        if lists.iter().any(|l| l.contains(&0)) {
            return Err(config("search space values must be >= 1"));
        }
        if self.beta.iter().any(|b| !(*b > 0.0) || !b.is_finite()) {
            return Err(config("bandwidth choices must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Constraints {
    /// Largest allowed `τ / (2·M·K·N)`.
    pub max_tau_ratio: f64,
    /// Largest allowed `φ / ((MK + KN + MN)·baseline_width)`.
    pub max_phi_ratio: f64,
    pub max_area: f64,
    pub max_power: f64,
    #[serde(default)]
    pub min_accuracy: Option<f64>,
    #[serde(default = "default_width")]
    pub baseline_width: u32,
    #[serde(default = "default_width")]
    pub bit_out: u32,
}

fn default_width() -> u32 {
    8
}

impl Constraints {
    /// Bounds loose enough that nothing is pruned.
    pub fn unbounded() -> Self {
        Self {
            max_tau_ratio: f64::INFINITY,
            max_phi_ratio: f64::INFINITY,
            max_area: f64::INFINITY,
            max_power: f64::INFINITY,
            min_accuracy: None,
            baseline_width: default_width(),
            bit_out: default_width(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, x) in [
            ("max_tau_ratio", self.max_tau_ratio),
            ("max_phi_ratio", self.max_phi_ratio),
            ("max_area", self.max_area),
            ("max_power", self.max_power),
        ] {
            if !(x > 0.0) {
                return Err(config(format!("{name} must be positive")));
            }
        }
        if let Some(a) = self.min_accuracy {
            if !(a > 0.0) {
                return Err(config("min_accuracy must be positive"));
            }
        }
        if self.baseline_width == 0 || self.bit_out == 0 {
            return Err(config("bit widths must be >= 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelOptions {
    #[serde(default)]
    pub tau: TauVariant,
    #[serde(default)]
    pub load: LoadModel,
}

/// A design point with every model evaluated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluated {
    pub point: DesignPoint,
    pub tau: Tau,
    pub phi: Phi,
    pub tau_ratio: f64,
    pub phi_ratio: f64,
    pub cost: AreaPower,
    pub omega: Omega,
    pub accuracy: Option<f64>,
}

pub fn evaluate(
    shape: &ProblemShape,
    point: &DesignPoint,
    tables: &CostTables,
    cons: &Constraints,
    opts: ModelOptions,
) -> Result<Evaluated> {
    let cfg = point.vq();
    let tau = tau_with(shape, &cfg, opts.tau);
    let phi = phi(shape, &cfg, point.lut_precision.bits(), cons.bit_out);
    let (ops, bits) = dense_baseline(shape, cons.baseline_width);
    Ok(Evaluated {
        point: *point,
        tau,
        phi,
        tau_ratio: tau.total as f64 / ops as f64,
        phi_ratio: phi.total as f64 / bits as f64,
        cost: area_power(point, tables)?,
        omega: omega_with(shape, point, opts.load)?,
        accuracy: None,
    })
}

fn ranking_order(a: &Evaluated, b: &Evaluated) -> Ordering {
    a.omega
        .cycles
        .total_cmp(&b.omega.cycles)
        .then(a.cost.area.total_cmp(&b.cost.area))
        .then(a.point.cmp_key(&b.point))
}

/// Survivor counts and constraint violations of one step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepSummary {
    pub step: usize,
    pub name: String,
    pub input: usize,
    pub survivors: usize,
    /// Points failing each constraint; a point may fail several.
    pub violations: BTreeMap<String, usize>,
    /// Constraint that removed the most points, if any were removed.
    pub binding: Option<String>,
}

fn summarize(step: usize, name: &str, input: usize, survivors: usize, violations: BTreeMap<String, usize>) -> StepSummary {
    let binding = violations
        .iter()
        .filter(|(_, n)| **n > 0)
        .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0)))
        .map(|(k, _)| k.clone());
    StepSummary { step, name: name.into(), input, survivors, violations, binding }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Infeasible {
    /// First step that left no survivors.
    pub step: usize,
    pub binding: Option<String>,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchReport {
    pub shape: ProblemShape,
    pub candidates: Vec<Evaluated>,
    pub step1: Vec<Evaluated>,
    pub step2: Vec<Evaluated>,
    pub step3: Vec<Evaluated>,
    /// Step-3 survivors after parallelism expansion, deduplicated.
    pub step4: Vec<Evaluated>,
    /// `step4` sorted by (ω, area, v, c, ...).
    pub ranking: Vec<Evaluated>,
    pub steps: Vec<StepSummary>,
    pub probes: Vec<(VqConfig, f64)>,
    pub infeasible: Option<Infeasible>,
}

impl SearchReport {
    pub fn best(&self) -> Option<&Evaluated> {
        self.ranking.first()
    }
}

fn violations(names: &[&str]) -> BTreeMap<String, usize> {
    names.iter().map(|n| (n.to_string(), 0)).collect()
}

fn hw_ok(e: &Evaluated, cons: &Constraints) -> bool {
    e.cost.area <= cons.max_area && e.cost.power <= cons.max_power
}

/// Runs the four search steps. Candidates are evaluated in the order of
/// [`SearchSpace::points`]; the probe is called once per distinct
/// quantizer configuration reaching step 3, in first-seen order.
pub fn search(
    shape: &ProblemShape,
    space: &SearchSpace,
    cons: &Constraints,
    tables: &CostTables,
    probe: &mut dyn AccuracyProbe,
    opts: ModelOptions,
) -> Result<SearchReport> {
    shape.validate()?;
    space.validate()?;
    cons.validate()?;
    tables.validate()?;
    let candidates = space.points().iter().map(|p| evaluate(shape, p, tables, cons, opts)).collect::<Result<Vec<_>>>()?;
    let mut steps = Vec::new();

    let mut v1 = violations(&["tau", "phi"]);
    let step1: Vec<Evaluated> = candidates
        .iter()
        .filter(|e| {
            let tau_bad = e.tau_ratio > cons.max_tau_ratio;
            let phi_bad = e.phi_ratio > cons.max_phi_ratio;
            *v1.get_mut("tau").unwrap() += usize::from(tau_bad);
            *v1.get_mut("phi").unwrap() += usize::from(phi_bad);
            !tau_bad && !phi_bad
        })
        .cloned()
        .collect();
    steps.push(summarize(1, "computation and memory", candidates.len(), step1.len(), v1));

    let mut v2 = violations(&["area", "power"]);
    let step2: Vec<Evaluated> = step1
        .iter()
        .filter(|e| {
            let area_bad = e.cost.area > cons.max_area;
            let power_bad = e.cost.power > cons.max_power;
            *v2.get_mut("area").unwrap() += usize::from(area_bad);
            *v2.get_mut("power").unwrap() += usize::from(power_bad);
            !area_bad && !power_bad
        })
        .cloned()
        .collect();
    steps.push(summarize(2, "hardware constraints", step1.len(), step2.len(), v2));

    let mut probes: Vec<(VqConfig, f64)> = Vec::new();
    let mut v3 = violations(&["accuracy"]);
    let mut step3 = Vec::new();
    for e in &step2 {
        let mut e = e.clone();
        if let Some(min) = cons.min_accuracy {
            let cfg = e.point.vq();
            let acc = match probes.iter().find(|(c, _)| *c == cfg) {
                Some((_, a)) => *a,
                None => {
                    let a = probe.accuracy(&cfg)?;
                    probes.push((cfg, a));
                    a
                }
            };
            e.accuracy = Some(acc);
            if acc < min {
                *v3.get_mut("accuracy").unwrap() += 1;
                continue;
            }
        }
        step3.push(e);
    }
    steps.push(summarize(3, "accuracy probe", step2.len(), step3.len(), v3));

    let max_imm = space.max_n_imm.unwrap_or(DEFAULT_MAX_N_IMM);
    let mut step4: Vec<Evaluated> = Vec::new();
    let mut v4 = violations(&["area", "power", "max_n_imm"]);
    for e in &step3 {
        let mut cur = e.clone();
        while cur.omega.binding == Bound::Lut {
            if cur.point.n_imm + 1 > max_imm {
                *v4.get_mut("max_n_imm").unwrap() += 1;
                break;
            }
            let mut next_point = cur.point;
            next_point.n_imm += 1;
            let mut next = evaluate(shape, &next_point, tables, cons, opts)?;
            next.accuracy = cur.accuracy;
            if !hw_ok(&next, cons) {
                *v4.get_mut("area").unwrap() += usize::from(next.cost.area > cons.max_area);
                *v4.get_mut("power").unwrap() += usize::from(next.cost.power > cons.max_power);
                break;
            }
            if next.omega.cycles > cur.omega.cycles {
                break;
            }
            cur = next;
        }
        if !step4.iter().any(|s: &Evaluated| s.point == cur.point) {
            step4.push(cur);
        }
    }
    steps.push(summarize(4, "parallelism expansion", step3.len(), step4.len(), v4));

    let mut ranking = step4.clone();
    ranking.sort_by(ranking_order);

    let infeasible = steps.iter().take(3).find(|s| s.survivors == 0).map(|s| Infeasible {
        step: s.step,
        binding: s.binding.clone(),
        message: format!(
            "no design survives step {} ({}); binding constraint: {}",
            s.step,
            s.name,
            s.binding.as_deref().unwrap_or("none")
        ),
    });

    Ok(SearchReport { shape: *shape, candidates, step1, step2, step3, step4, ranking, steps, probes, infeasible })
}

/// Long-format heatmap rows `v,c,step,survivors,best_omega` covering every
/// `(v, c)` pair of the space at every step.
pub fn heatmap_csv(report: &SearchReport, space: &SearchSpace) -> String {
    let mut out = String::from("v,c,step,survivors,best_omega\n");
    let stages: [(&str, &[Evaluated]); 5] = [
        ("candidates", &report.candidates),
        ("step1", &report.step1),
        ("step2", &report.step2),
        ("step3", &report.step3),
        ("step4", &report.step4),
    ];
    for &v in &space.v {
        for &c in &space.c {
            for (name, set) in &stages {
                let hits: Vec<&Evaluated> = set.iter().filter(|e| e.point.v == v && e.point.c == c).collect();
                let best = hits.iter().map(|e| e.omega.cycles).min_by(|a, b| a.total_cmp(b));
                let best = best.map(|b| format!("{b}")).unwrap_or_default();
                let _ = writeln!(out, "{v},{c},{name},{},{best}", hits.len());
            }
        }
    }
    out
}
