// SPDX-License-Identifier: Apache-2.0

#![allow(dead_code)]

use std::path::Path;
use std::process::Command;

use lutdla_core::{ProblemShape, SimilarityMetric};
use lutdla_dse::{Constraints, CostTables, DesignPoint, SearchSpace};

pub struct Run {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

pub fn lutdla(args: &[&str], out: &Path) -> Run {
    let o = Command::new(env!("CARGO_BIN_EXE_lutdla"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs");
    Run {
        code: o.status.code().unwrap_or(-1),
        stdout: String::from_utf8_lossy(&o.stdout).into_owned(),
        stderr: String::from_utf8_lossy(&o.stderr).into_owned(),
    }
}

pub struct Steps {
    pub step1: Vec<DesignPoint>,
    pub step2: Vec<DesignPoint>,
    pub step3: Vec<DesignPoint>,
    pub ranking: Vec<DesignPoint>,
}

/// Design-search brute force straight from the cost formulas. Covers L2,
/// FP32 distances, 8-bit tables and unconstrained bandwidth.
pub struct Oracle {
    pub tables: CostTables,
    pub shape: ProblemShape,
}

impl Oracle {
    pub fn tau(&self, p: &DesignPoint) -> f64 {
        let s = self.shape;
        let nc = s.k.div_ceil(p.v) as f64;
        let alpha = if p.metric == SimilarityMetric::L2 { 2.0 } else { 1.0 };
        alpha * (p.c * s.m * p.v) as f64 * nc + (s.m * s.n) as f64 * nc
    }

    pub fn phi(&self, p: &DesignPoint) -> f64 {
        let s = self.shape;
        let nc = s.k.div_ceil(p.v) as f64;
        let log2c = (p.c as f64).log2().ceil();
        (s.n * p.c) as f64 * nc * 8.0 + (s.m * s.n) as f64 * 8.0 + nc * s.m as f64 * log2c
    }

    pub fn area(&self, p: &DesignPoint) -> f64 {
        let t = &self.tables;
        let lane = t.dpe_lane.l2.fp32.area;
        let ccu = (p.c * p.v) as f64 * (lane + 32.0 * t.sram_bit.area);
        let bits = (2 * p.c * p.t_n * 8) as f64
            + (t.scratchpad_rows * p.t_n) as f64 * t.psum_bits as f64
            + t.scratchpad_rows as f64 * (p.c as f64).log2().ceil().max(1.0);
        let imm = bits * t.sram_bit.area + p.lut_banks as f64 * t.adder.area;
        imm * p.n_imm as f64 + ccu * p.n_ccu as f64 + t.other.area
    }

    pub fn omega(&self, p: &DesignPoint) -> (f64, &'static str) {
        let s = self.shape;
        let nc = s.k.div_ceil(p.v) as f64;
        let sim = s.m as f64 * nc / p.n_ccu as f64;
        let lut = (s.m * s.n) as f64 * nc / (p.n_imm * p.lut_banks) as f64;
        if lut >= sim {
            (lut, "lut")
        } else {
            (sim, "sim")
        }
    }

    /// Survivors of the first three steps and the final ranking.
    pub fn run(&self, space: &SearchSpace, cons: &Constraints, accuracy: impl Fn(&DesignPoint) -> f64) -> Steps {
        let s = self.shape;
        let ops = 2.0 * (s.m * s.k * s.n) as f64;
        let bits = ((s.m * s.k + s.k * s.n + s.m * s.n) * 8) as f64;
        let mut all = Vec::new();
        for &v in &space.v {
            for &c in &space.c {
                for &n_ccu in &space.n_ccu {
                    for &n_imm in &space.n_imm {
                        all.push(DesignPoint::new(v, c, SimilarityMetric::L2, n_ccu, n_imm));
                    }
                }
            }
        }
        let step1: Vec<DesignPoint> =
            all.into_iter().filter(|p| self.tau(p) / ops <= cons.max_tau_ratio && self.phi(p) / bits <= cons.max_phi_ratio).collect();
        let step2: Vec<DesignPoint> = step1.iter().copied().filter(|p| self.area(p) <= cons.max_area).collect();
        let step3: Vec<DesignPoint> = step2.iter().copied().filter(|p| cons.min_accuracy.is_none_or(|min| accuracy(p) >= min)).collect();
        let mut expanded: Vec<DesignPoint> = Vec::new();
        for p in &step3 {
            let mut cur = *p;
            loop {
                let (w, label) = self.omega(&cur);
                let mut next = cur;
                next.n_imm += 1;
                if label != "lut" || next.n_imm > space.max_n_imm.unwrap() || self.area(&next) > cons.max_area || self.omega(&next).0 > w {
                    break;
                }
                cur = next;
            }
            if !expanded.contains(&cur) {
                expanded.push(cur);
            }
        }
        expanded.sort_by(|a, b| {
            self.omega(a)
                .0
                .total_cmp(&self.omega(b).0)
                .then(self.area(a).total_cmp(&self.area(b)))
                .then(a.v.cmp(&b.v))
                .then(a.c.cmp(&b.c))
                .then(a.n_ccu.cmp(&b.n_ccu))
                .then(a.n_imm.cmp(&b.n_imm))
        });
        Steps { step1, step2, step3, ranking: expanded }
    }
}
