// SPDX-License-Identifier: Apache-2.0

use std::fmt::Write;
use std::path::PathBuf;

use lutdla_core::dataflow::{footprint, BitWidths, DataflowKind};

use crate::error::Result;
use crate::output::{OutDir, Provenance};
use crate::Context;

pub fn run(ctx: &Context) -> Result<Vec<PathBuf>> {
    let mut cfg = ctx.cfg.dataflow.clone().unwrap_or_default();
    cfg.shape.validate()?;
    cfg.vq.validate()?;
    cfg.tile.validate(&cfg.shape)?;
    let bits = *cfg.bits.get_or_insert_with(|| BitWidths::defaults_for(&cfg.vq));
    let prov = Provenance::new("dataflow", &cfg, ctx.seed)?;

    let mut csv = String::from("dataflow,indices_kib,psumlut_kib,scratchpad_kib,total_kib,psumlut_ping_pong\n");
    for kind in DataflowKind::ALL {
        let f = footprint(kind, &cfg.shape, &cfg.vq, &cfg.tile, &bits);
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{}",
            kind.name(),
            f.indices_kib(),
            f.psumlut_kib(),
            f.scratchpad_kib(),
            f.total_kib(),
            f.psumlut_ping_pong
        );
        ctx.log(format!("{:>4}: {:.2} KiB", kind.name(), f.total_kib()));
    }
    let mut out = OutDir::create(&ctx.out, prov)?;
    out.text("dataflow.csv", &csv)?;
    Ok(out.written)
}
