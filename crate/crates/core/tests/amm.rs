// SPDX-License-Identifier: Apache-2.0

use lutdla_core::dataflow::{ls_execute, TileConfig};
use lutdla_core::{
    amm_error, build_lut, encode, exact_gemm, lut_gemm, Codebook, DistPrecision, LutPrecision, Matrix,
    SimilarityMetric, VqConfig,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn gaussian(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| rng.sample::<f64, _>(StandardNormal))
}

fn rel_close(x: &Matrix, y: &Matrix, tol: f64) -> bool {
    let scale = y.max_abs().max(1e-12);
    x.as_slice().iter().zip(y.as_slice()).all(|(p, q)| (p - q).abs() <= tol * scale)
}

/// Builds an input whose rows are assembled from codebook entries only.
fn codeword_input(cb: &Codebook, rows: usize, rng: &mut ChaCha8Rng) -> Matrix {
    let mut a = Matrix::zeros(rows, cb.k());
    for m in 0..rows {
        for k in 0..cb.subspaces() {
            let j = rng.gen_range(0..cb.c());
            for (i, x) in cb.centroid(k, j).iter().enumerate() {
                if k * cb.v() + i < cb.k() {
                    a[(m, k * cb.v() + i)] = *x;
                }
            }
        }
    }
    a
}

#[test]
fn c_sweep_reduces_error_on_average() {
    let mut means = Vec::new();
    for c in [2, 4, 8] {
        let mut total = 0.0;
        for seed in 0..10 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = gaussian(128, 16, &mut rng);
            let b = gaussian(16, 8, &mut rng);
            let cfg = VqConfig::new(4, c, SimilarityMetric::L2);
            let cb = Codebook::fit(&a, &cfg, seed).unwrap();
            total += amm_error(&a, &b, &cfg, &cb).unwrap().frobenius_rel.unwrap();
        }
        means.push(total / 10.0);
    }
    assert!(means[0] > means[1] && means[1] > means[2], "{means:?}");
}

#[test]
fn single_centroid_matches_rank_collapse_baseline() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let a = gaussian(10, 6, &mut rng);
    let b = gaussian(6, 3, &mut rng);
    let z = Matrix::from_rows(&[vec![0.3, -0.2]]).unwrap();
    let cb = Codebook::new(6, 2, vec![z.clone(), z.scale(2.0), z.scale(-1.0)]).unwrap();
    let cfg = VqConfig::new(2, 1, SimilarityMetric::L1);
    // every row collapses onto the same reconstruction
    let row: Vec<f64> = (0..3).flat_map(|k| cb.centroid(k, 0).to_vec()).collect();
    let collapsed = Matrix::from_fn(10, 6, |_, c| row[c]);
    let baseline = exact_gemm(&collapsed, &b).unwrap();
    let exact = exact_gemm(&a, &b).unwrap();
    let expected = baseline.sub(&exact).unwrap().frobenius_norm() / exact.frobenius_norm();
    let got = amm_error(&a, &b, &cfg, &cb).unwrap().frobenius_rel.unwrap();
    assert!((got - expected).abs() <= 1e-6 * expected, "{got} vs {expected}");
}

#[test]
fn int8_tables_never_beat_fp32_on_average() {
    let (mut fp32, mut int8) = (0.0, 0.0);
    for seed in 0..20 {
        let mut rng = ChaCha8Rng::seed_from_u64(100 + seed);
        let a = gaussian(64, 16, &mut rng);
        let b = gaussian(16, 16, &mut rng);
        let mut cfg = VqConfig::new(4, 8, SimilarityMetric::L2);
        let cb = Codebook::fit(&a, &cfg, seed).unwrap();
        fp32 += amm_error(&a, &b, &cfg, &cb).unwrap().frobenius_rel.unwrap();
        cfg.lut_precision = LutPrecision::Int8;
        int8 += amm_error(&a, &b, &cfg, &cb).unwrap().frobenius_rel.unwrap();
    }
    assert!(int8 >= fp32, "int8 {int8} < fp32 {fp32}");
}

#[test]
fn pipeline_is_deterministic() {
    let run = || {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let a = gaussian(40, 10, &mut rng);
        let b = gaussian(10, 5, &mut rng);
        let cfg = VqConfig::new(3, 6, SimilarityMetric::Chebyshev);
        let cb = Codebook::fit(&a, &cfg, 77).unwrap();
        let e = encode(&a, &cb, cfg.metric, cfg.dist_precision).unwrap();
        let out = lut_gemm(&e, &build_lut(&cb, &b, cfg.lut_precision).unwrap()).unwrap();
        (cb, e, out)
    };
    let (x, y) = (run(), run());
    assert_eq!(x.0, y.0);
    assert_eq!(x.1, y.1);
    assert_eq!(x.2.as_slice().iter().map(|f| f.to_bits()).collect::<Vec<_>>(), y.2.as_slice().iter().map(|f| f.to_bits()).collect::<Vec<_>>());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn codeword_inputs_are_lossless(seed in any::<u64>(), v in 1usize..5, c in 2usize..9, k in 1usize..13, mi in 0usize..3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let metric = SimilarityMetric::ALL[mi];
        let train = gaussian(32, k, &mut rng);
        let cfg = VqConfig::new(v, c, metric);
        let cb = Codebook::fit(&train, &cfg, seed).unwrap();
        let a = codeword_input(&cb, 9, &mut rng);
        let b = gaussian(k, 5, &mut rng);
        let e = encode(&a, &cb, metric, DistPrecision::Fp32).unwrap();
        let approx = lut_gemm(&e, &build_lut(&cb, &b, LutPrecision::Fp32).unwrap()).unwrap();
        prop_assert!(rel_close(&approx, &exact_gemm(&a, &b).unwrap(), 1e-5));
    }

    #[test]
    fn lookup_equals_reconstruct_then_multiply(seed in any::<u64>(), mi in 0usize..3, bf16 in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = gaussian(20, 11, &mut rng);
        let b = gaussian(11, 7, &mut rng);
        let mut cfg = VqConfig::new(3, 5, SimilarityMetric::ALL[mi]);
        if bf16 {
            cfg.dist_precision = DistPrecision::Bf16;
        }
        let cb = Codebook::fit(&a, &cfg, seed).unwrap();
        let e = encode(&a, &cb, cfg.metric, cfg.dist_precision).unwrap();
        let approx = lut_gemm(&e, &build_lut(&cb, &b, LutPrecision::Fp32).unwrap()).unwrap();
        let rec = exact_gemm(&cb.reconstruct(&e).unwrap(), &b).unwrap();
        prop_assert!(rel_close(&approx, &rec, 1e-5));
    }

    #[test]
    fn ls_schedule_matches_lookup_gemm(seed in any::<u64>(), t_n in 1usize..10, m_tile in 1usize..10, int8 in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = gaussian(9, 7, &mut rng);
        let b = gaussian(7, 9, &mut rng);
        let mut cfg = VqConfig::new(2, 4, SimilarityMetric::L1);
        if int8 {
            cfg.lut_precision = LutPrecision::Int8;
        }
        let cb = Codebook::fit(&a, &cfg, seed).unwrap();
        let e = encode(&a, &cb, cfg.metric, cfg.dist_precision).unwrap();
        let expect = lut_gemm(&e, &build_lut(&cb, &b, cfg.lut_precision).unwrap()).unwrap();
        let run = ls_execute(&a, &b, &cfg, &cb, &TileConfig::new(t_n, m_tile)).unwrap();
        prop_assert_eq!(run.output, expect);
    }
}
