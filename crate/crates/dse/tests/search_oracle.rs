// SPDX-License-Identifier: Apache-2.0

use lutdla_core::{ProblemShape, SimilarityMetric, VqConfig};
use lutdla_dse::*;
use proptest::prelude::*;

fn shape() -> ProblemShape {
    ProblemShape::new(256, 192, 320).unwrap()
}

fn tiny_space() -> SearchSpace {
    let mut s = SearchSpace::new(vec![2, 4], vec![4, 8, 16], vec![1, 2], vec![1, 2]);
    s.max_n_imm = Some(6);
    s
}

/// Straight re-derivation of every model from the defining formulas.
struct Oracle {
    tables: CostTables,
    shape: ProblemShape,
}

impl Oracle {
    fn tau(&self, p: &DesignPoint) -> f64 {
        let s = self.shape;
        let nc = s.k.div_ceil(p.v) as f64;
        let alpha = if p.metric == SimilarityMetric::L2 { 2.0 } else { 1.0 };
        alpha * (p.c * s.m * p.v) as f64 * nc + (s.m * s.n) as f64 * nc
    }

    fn phi(&self, p: &DesignPoint) -> f64 {
        let s = self.shape;
        let nc = s.k.div_ceil(p.v) as f64;
        let log2c = (p.c as f64).log2().ceil();
        (s.n * p.c) as f64 * nc * 8.0 + (s.m * s.n) as f64 * 8.0 + nc * s.m as f64 * log2c
    }

    fn area(&self, p: &DesignPoint) -> f64 {
        let t = &self.tables;
        let lane = t.dpe_lane.l2.fp32.area;
        let ccu = (p.c * p.v) as f64 * (lane + 32.0 * t.sram_bit.area);
        let bits = (2 * p.c * p.t_n * 8) as f64
            + (t.scratchpad_rows * p.t_n) as f64 * t.psum_bits as f64
            + t.scratchpad_rows as f64 * (p.c as f64).log2().ceil().max(1.0);
        let imm = bits * t.sram_bit.area + p.lut_banks as f64 * t.adder.area;
        imm * p.n_imm as f64 + ccu * p.n_ccu as f64 + t.other.area
    }

    fn omega(&self, p: &DesignPoint) -> (f64, &'static str) {
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

    fn run(&self, space: &SearchSpace, cons: &Constraints) -> (Vec<DesignPoint>, Vec<DesignPoint>, Vec<DesignPoint>) {
        let s = self.shape;
        let ops = 2.0 * (s.m * s.k * s.n) as f64;
        let bits = ((s.m * s.k + s.k * s.n + s.m * s.n) * 8) as f64;
        let all = space.points();
        let step1: Vec<DesignPoint> =
            all.into_iter().filter(|p| self.tau(p) / ops <= cons.max_tau_ratio && self.phi(p) / bits <= cons.max_phi_ratio).collect();
        let step2: Vec<DesignPoint> = step1.iter().copied().filter(|p| self.area(p) <= cons.max_area).collect();
        let mut expanded: Vec<DesignPoint> = Vec::new();
        for p in &step2 {
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
        (step1, step2, expanded)
    }
}

fn points(set: &[Evaluated]) -> Vec<DesignPoint> {
    set.iter().map(|e| e.point).collect()
}

fn run(space: &SearchSpace, cons: &Constraints) -> SearchReport {
    run_on(&shape(), space, cons)
}

fn run_on(shape: &ProblemShape, space: &SearchSpace, cons: &Constraints) -> SearchReport {
    let mut probe = |_: &VqConfig| -> lutdla_dse::Result<f64> { Ok(1.0) };
    search(shape, space, cons, &CostTables::default(), &mut probe, ModelOptions::default()).unwrap()
}

fn constraints(tau: f64, phi: f64, area: f64) -> Constraints {
    let mut c = Constraints::unbounded();
    c.max_tau_ratio = tau;
    c.max_phi_ratio = phi;
    c.max_area = area;
    c
}

#[test]
fn search_matches_brute_force() {
    let space = tiny_space();
    assert!(space.points().len() <= 24);
    // the second shape is narrow enough that expansion runs into the sim term
    let cases = [
        (shape(), Constraints::unbounded(), (24, 24)),
        (shape(), constraints(0.2, 2.0, f64::INFINITY), (12, 12)),
        (shape(), constraints(1.0, 1.2, 100.0), (12, 8)),
        (shape(), constraints(0.16, 2.0, 90.0), (8, 4)),
        (shape(), constraints(0.1, 2.0, 90.0), (0, 0)),
        (ProblemShape::new(256, 192, 24).unwrap(), constraints(1.0, 10.0, 150.0), (24, 22)),
    ];
    for (shape, cons, expected) in cases {
        let oracle = Oracle { tables: CostTables::default(), shape };
        let r = run_on(&shape, &space, &cons);
        let (s1, s2, ranked) = oracle.run(&space, &cons);
        assert_eq!(points(&r.step1), s1, "step 1 under {cons:?}");
        assert_eq!(points(&r.step2), s2, "step 2 under {cons:?}");
        assert_eq!(points(&r.ranking), ranked, "ranking under {cons:?}");
        assert_eq!(s1.len(), expected.0);
        assert_eq!(s2.len(), expected.1);
        for e in &r.candidates {
            assert_eq!(e.tau.total as f64, oracle.tau(&e.point));
            assert_eq!(e.phi.total as f64, oracle.phi(&e.point));
            assert!((e.cost.area - oracle.area(&e.point)).abs() <= 1e-9 * e.cost.area);
            assert_eq!(e.omega.binding.label(), oracle.omega(&e.point).1);
        }
    }
}

#[test]
fn expansion_stops_when_similarity_binds() {
    let shape = ProblemShape::new(256, 192, 24).unwrap();
    let mut space = SearchSpace::new(vec![4], vec![8], vec![1], vec![1]);
    space.max_n_imm = Some(64);
    let r = run_on(&shape, &space, &Constraints::unbounded());
    let best = r.best().unwrap();
    assert_eq!(best.omega.binding, Bound::Sim);
    assert_eq!(best.point.n_imm, 2);
    assert!(best.omega.cycles <= r.step3[0].omega.cycles);
}

#[test]
fn pruned_points_violate_a_constraint() {
    let space = tiny_space();
    let cons = constraints(0.15, 1.2, 2500.0);
    let r = run(&space, &cons);
    for e in &r.candidates {
        let kept1 = r.step1.iter().any(|s| s.point == e.point);
        assert_eq!(kept1, e.tau_ratio <= cons.max_tau_ratio && e.phi_ratio <= cons.max_phi_ratio);
    }
    for e in &r.step1 {
        let kept2 = r.step2.iter().any(|s| s.point == e.point);
        assert_eq!(kept2, e.cost.area <= cons.max_area && e.cost.power <= cons.max_power);
    }
}

#[test]
fn hardware_and_model_filters_commute() {
    let space = tiny_space();
    let cons = constraints(0.15, 1.2, 2500.0);
    let r = run(&space, &cons);
    let hw_first: Vec<DesignPoint> = r
        .candidates
        .iter()
        .filter(|e| e.cost.area <= cons.max_area && e.cost.power <= cons.max_power)
        .filter(|e| e.tau_ratio <= cons.max_tau_ratio && e.phi_ratio <= cons.max_phi_ratio)
        .map(|e| e.point)
        .collect();
    assert_eq!(points(&r.step2), hw_first);
}

#[test]
fn ranking_is_deterministic() {
    let space = tiny_space();
    let cons = constraints(1.0, 2.0, 5000.0);
    let a = run(&space, &cons);
    let b = run(&space, &cons);
    assert_eq!(a, b);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn relaxing_constraints_never_shrinks_survivors(
        tau in 0.05f64..1.0, phi in 0.5f64..3.0, area in 500.0f64..6000.0,
        dt in 0.0f64..0.5, dp in 0.0f64..1.0, da in 0.0f64..2000.0,
    ) {
        let space = tiny_space();
        let tight = run(&space, &constraints(tau, phi, area));
        let loose = run(&space, &constraints(tau + dt, phi + dp, area + da));
        for (t, l) in [(&tight.step1, &loose.step1), (&tight.step2, &loose.step2)] {
            for e in t.iter() {
                prop_assert!(l.iter().any(|x| x.point == e.point));
            }
        }
    }
}

