// SPDX-License-Identifier: Apache-2.0

use lutdla_core::dataflow::TileConfig;
use lutdla_core::{ProblemShape, SimilarityMetric, VqConfig};
use lutdla_dse::{Bound, DesignPoint};
use lutdla_sim::{simulate, steady_state_check, HwConfig, SimError, SimTrace};

fn shape(m: usize, k: usize, n: usize) -> ProblemShape {
    ProblemShape::new(m, k, n).unwrap()
}

fn transformer_layer() -> (ProblemShape, VqConfig, HwConfig) {
    let s = shape(512, 768, 768);
    let vq = VqConfig::new(4, 32, SimilarityMetric::L2);
    let hw = HwConfig::new(&s, &vq, 16, 16);
    (s, vq, hw)
}

fn check_accounting(t: &SimTrace, s: &ProblemShape, vq: &VqConfig) {
    assert_eq!(t.lookups, (s.m * vq.subspaces(s.k) * s.n) as u64);
    for u in &t.imms {
        assert_eq!(u.cycles(), t.total_cycles, "{u:?}");
        assert!(u.busy <= t.total_cycles);
    }
    for u in &t.ccus {
        assert_eq!(u.cycles(), t.ccm_cycles, "{u:?}");
    }
    assert!(t.loader_busy <= t.total_cycles);
    assert_eq!(t.causality_violations, 0);
    assert_eq!(t.pingpong_violations, 0);
}

#[test]
fn transformer_layer_cycles() {
    let (s, vq, hw) = transformer_layer();
    let t = simulate(&s, &vq, &hw).unwrap();
    let lane_bound = (512 * 192 * 768 / 16) as u64;
    assert!(t.total_cycles >= lane_bound);
    assert!((t.total_cycles as f64 - 4_743_000.0).abs() / 4_743_000.0 <= 0.02, "{}", t.total_cycles);
    assert_eq!(t.bottleneck, Bound::Lut);
    check_accounting(&t, &s, &vq);
    // 48 tiles, each 192 passes plus one write-back of 512 rows.
    let fill = t.total_cycles - 48 * 193 * 512;
    assert!(fill < 64, "fill {fill}");
}

#[test]
fn single_centroid_closed_form() {
    // One centroid per subspace: a single dPE, one index per cycle.
    let s = shape(32, 16, 64);
    let vq = VqConfig::new(2, 1, SimilarityMetric::L1);
    let hw = HwConfig::new(&s, &vq, 16, 16);
    let t = simulate(&s, &vq, &hw).unwrap();
    let n_c = 8;
    let tiles = 4;
    let pass = 32 * 16 / 16;
    let lookup_term = 32 * n_c * 64 / 16;
    // dPE latency, FIFO synchroniser, indices-buffer write
    let fill = 1 + hw.sync_stages + 1;
    assert_eq!(t.total_cycles, (lookup_term + tiles * pass + fill as usize) as u64);
    check_accounting(&t, &s, &vq);
}

#[test]
fn zero_bandwidth_deadlocks_with_bandwidth_stalls() {
    let (s, vq, hw) = transformer_layer();
    let hw = HwConfig { beta: Some(0.0), ..hw };
    match simulate(&s, &vq, &hw) {
        Err(SimError::Deadlock { stalls, state, .. }) => {
            assert!(stalls.bandwidth > 0);
            assert_eq!(stalls.fifo_empty + stalls.lut_load + stalls.drain, 0);
            assert!(state.contains("fifo0"), "{state}");
        }
        other => panic!("expected deadlock, got {other:?}"),
    }
}

#[test]
fn starved_loader_hits_cycle_limit() {
    let s = shape(16, 16, 16);
    let vq = VqConfig::new(4, 16, SimilarityMetric::L2);
    let hw = HwConfig { beta: Some(1e-6), max_cycles: 100_000, ..HwConfig::new(&s, &vq, 16, 16) };
    assert!(matches!(simulate(&s, &vq, &hw), Err(SimError::CycleLimit { limit: 100_000, .. })));
}

#[test]
fn doubling_imms_in_lookup_bound_design() {
    let (s, vq, hw) = transformer_layer();
    let one = simulate(&s, &vq, &hw).unwrap();
    let two = simulate(&s, &vq, &HwConfig { n_imm: 2, ..hw }).unwrap();
    let speedup = one.total_cycles as f64 / two.total_cycles as f64;
    assert!((1.8..=2.0).contains(&speedup), "{speedup}");
}

#[test]
fn lookup_bound_when_outputs_are_wide() {
    let s = shape(128, 64, 1024);
    let vq = VqConfig::new(4, 16, SimilarityMetric::L2);
    let hw = HwConfig::new(&s, &vq, 16, 16);
    let t = simulate(&s, &vq, &hw).unwrap();
    let check = steady_state_check(&t, &hw, &s, &vq).unwrap();
    assert_eq!((check.model_binding, check.sim_binding), (Bound::Lut, Bound::Lut));
    assert!(check.agree && check.rel_error < 0.1, "{check:?}");
}

#[test]
fn similarity_bound_with_one_slow_ccu() {
    let s = shape(128, 64, 16);
    let vq = VqConfig::new(4, 64, SimilarityMetric::L2);
    // 8 dPEs for 64 centroids: one subvector every 8 cycles
    let hw = HwConfig { dpes: 8, n_imm: 2, lut_banks: 32, ..HwConfig::new(&s, &vq, 16, 16) };
    let t = simulate(&s, &vq, &hw).unwrap();
    let check = steady_state_check(&t, &hw, &s, &vq).unwrap();
    assert_eq!((check.model_binding, check.sim_binding), (Bound::Sim, Bound::Sim));
    assert!(check.agree && check.rel_error < 0.1, "{check:?}");
    assert!(t.stalls.fifo_empty > 0);
}

#[test]
fn load_bound_under_narrow_bandwidth() {
    let s = shape(64, 128, 256);
    let vq = VqConfig::new(4, 32, SimilarityMetric::L2);
    let hw = HwConfig { beta: Some(32.0), n_imm: 4, ..HwConfig::new(&s, &vq, 16, 16) };
    let t = simulate(&s, &vq, &hw).unwrap();
    let check = steady_state_check(&t, &hw, &s, &vq).unwrap();
    assert_eq!((check.model_binding, check.sim_binding), (Bound::Load, Bound::Load));
    assert!(t.stalls.bandwidth + t.stalls.lut_load > 0);
    check_accounting(&t, &s, &vq);
    // every bank is one subspace of one output tile
    assert_eq!(t.lut_loads, 16 * 32);
    assert_eq!(t.lut_bits, 32 * 256 * 32 * u64::from(vq.lut_precision.bits()));
}

#[test]
fn deterministic_traces() {
    let s = shape(64, 64, 96);
    let vq = VqConfig::new(4, 16, SimilarityMetric::Chebyshev);
    let hw = HwConfig { beta: Some(100.0), n_ccu: 2, n_imm: 3, trace: true, ..HwConfig::new(&s, &vq, 8, 16) };
    let a = simulate(&s, &vq, &hw).unwrap();
    let b = simulate(&s, &vq, &hw).unwrap();
    assert_eq!(a, b);
    assert!(!a.events.is_empty());
    let mut buf = Vec::new();
    a.write_events(&mut buf).unwrap();
    let lines: Vec<_> = std::str::from_utf8(&buf).unwrap().lines().collect();
    assert_eq!(lines.len(), a.events.len());
    let first: serde_json::Value = serde_json::from_str(lines[0]).unwrap();
    assert!(first.get("cycle").is_some() && first.get("unit").is_some() && first.get("action").is_some());
}

#[test]
fn clock_ratio_and_blocks() {
    let s = shape(100, 40, 50);
    let vq = VqConfig::new(4, 8, SimilarityMetric::L2);
    let base = HwConfig { tile: TileConfig::new(16, 32), n_ccu: 2, n_imm: 2, beta: Some(48.0), ..HwConfig::new(&s, &vq, 8, 16) };
    for (ccm, imm) in [(1, 1), (2, 1), (3, 2), (1, 2)] {
        let hw = HwConfig { ccm_freq: ccm, imm_freq: imm, ..base };
        let t = simulate(&s, &vq, &hw).unwrap();
        check_accounting(&t, &s, &vq);
        assert!(t.fifo_high_water.iter().all(|&h| h <= hw.fifo_depth));
    }
    let fast = simulate(&s, &vq, &HwConfig { ccm_freq: 4, ..base }).unwrap();
    let slow = simulate(&s, &vq, &HwConfig { imm_freq: 4, ..base }).unwrap();
    assert!(fast.ccm_cycles > slow.ccm_cycles);
}

#[test]
fn design_point_round_trip() {
    let s = shape(256, 128, 256);
    let mut p = DesignPoint::new(4, 16, SimilarityMetric::L1, 2, 4);
    p.beta = Some(512.0);
    let hw = HwConfig::from_design(&p, &s);
    let t = simulate(&s, &p.vq(), &hw).unwrap();
    let check = steady_state_check(&t, &hw, &s, &p.vq()).unwrap();
    assert_eq!(check.simulated, t.total_cycles);
    assert!(check.rel_error < 0.15, "{check:?}");
}
