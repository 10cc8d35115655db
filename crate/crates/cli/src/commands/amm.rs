// SPDX-License-Identifier: Apache-2.0

use std::path::{Path, PathBuf};

use lutdla_core::io::{load_matrix, write_csv_matrix, Container};
use lutdla_core::{build_lut, encode, exact_gemm, lut_gemm, AmmError, Codebook, Matrix, ProblemShape, VqConfig};
use lutdla_dse::{dense_baseline, phi, tau, Phi, Tau};
use serde::Serialize;
use serde_json::json;

use crate::error::{CliError, Result};
use crate::output::{OutDir, Provenance};
use crate::Context;

#[derive(Debug, Serialize)]
struct SweepEntry {
    c: usize,
    frobenius_rel: Option<f64>,
    max_abs: f64,
}

#[derive(Debug, Serialize)]
struct Report {
    shape: ProblemShape,
    vq: VqConfig,
    error: AmmError,
    tau: Tau,
    phi: Phi,
    dense_ops: u64,
    dense_bits: u64,
    tau_ratio: f64,
    phi_ratio: f64,
    sweep: Vec<SweepEntry>,
}

fn read(path: &Path) -> Result<Matrix> {
    load_matrix(path).map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}

/// Codebook fit on `a`, then the table product.
fn approximate(a: &Matrix, b: &Matrix, vq: &VqConfig, seed: u64) -> Result<Matrix> {
    let codebook = Codebook::fit(a, vq, seed)?;
    let encoded = encode(a, &codebook, vq.metric, vq.dist_precision)?;
    let table = build_lut(&codebook, b, vq.lut_precision)?;
    Ok(lut_gemm(&encoded, &table)?)
}

pub fn run(ctx: &Context, a: Option<&Path>, b: Option<&Path>) -> Result<Vec<PathBuf>> {
    let mut cfg = ctx.cfg.amm.clone().unwrap_or_default();
    let pick = |arg: Option<&Path>, conf: &Option<PathBuf>| arg.map(Path::to_path_buf).or_else(|| conf.as_deref().map(|p| ctx.cfg.resolve(p)));
    cfg.a = pick(a, &cfg.a);
    cfg.b = pick(b, &cfg.b);
    let (Some(a_path), Some(b_path)) = (cfg.a.clone(), cfg.b.clone()) else {
        return Err(CliError::input("amm needs both matrices (--a/--b or amm.a/amm.b)"));
    };
    cfg.vq.validate()?;
    if cfg.c_sweep.contains(&0) || cfg.bit_out == 0 {
        return Err(CliError::input("c_sweep entries and bit_out must be >= 1"));
    }
    let prov = Provenance::new("amm", &cfg, ctx.seed)?;

    let (a, b) = (read(&a_path)?, read(&b_path)?);
    if a.cols() != b.rows() {
        return Err(CliError::input(format!("shape mismatch: A is {:?}, B is {:?}", a.shape(), b.shape())));
    }
    let shape = ProblemShape::new(a.rows(), a.cols(), b.cols())?;
    let exact = exact_gemm(&a, &b)?;
    let approx = approximate(&a, &b, &cfg.vq, ctx.seed)?;
    let error = AmmError::between(&approx, &exact)?;
    ctx.log(format!("{shape:?}: frobenius_rel {:?}, max_abs {}", error.frobenius_rel, error.max_abs));

    let mut sweep = Vec::new();
    for &c in &cfg.c_sweep {
        let vq = VqConfig { c, ..cfg.vq };
        let e = AmmError::between(&approximate(&a, &b, &vq, ctx.seed)?, &exact)?;
        ctx.log(format!("c = {c}: frobenius_rel {:?}", e.frobenius_rel));
        sweep.push(SweepEntry { c, frobenius_rel: e.frobenius_rel, max_abs: e.max_abs });
    }

    let (dense_ops, dense_bits) = dense_baseline(&shape, cfg.bit_out);
    let t = tau(&shape, &cfg.vq);
    let p = phi(&shape, &cfg.vq, cfg.vq.lut_precision.bits(), cfg.bit_out);
    let report = Report {
        shape,
        vq: cfg.vq,
        error,
        tau: t,
        phi: p,
        dense_ops,
        dense_bits,
        tau_ratio: t.total as f64 / dense_ops as f64,
        phi_ratio: p.total as f64 / dense_bits as f64,
        sweep,
    };

    let mut out = OutDir::create(&ctx.out, prov)?;
    if cfg.output.to_ascii_lowercase().ends_with(".csv") {
        let mut body = Vec::new();
        write_csv_matrix(&approx, &mut body)?;
        out.text(&cfg.output, &String::from_utf8(body).map_err(CliError::internal)?)?;
    } else {
        let mut container = Container::from(&approx);
        container.meta = json!({ "provenance": out.provenance() });
        let path = out.path(&cfg.output);
        container.save(&path)?;
        out.register(path);
    }
    out.json("amm_report.json", &report)?;
    Ok(out.written)
}
