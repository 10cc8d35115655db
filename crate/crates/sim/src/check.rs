// SPDX-License-Identifier: Apache-2.0

use lutdla_core::dataflow::ls_execute;
use lutdla_core::{Codebook, Matrix, ProblemShape, VqConfig};
use lutdla_dse::{omega, Bound, DesignPoint, Omega};
use serde::{Deserialize, Serialize};

use crate::config::HwConfig;
use crate::engine::simulate_functional;
use crate::error::{config, Result, SimError};
use crate::trace::SimTrace;

/// Simulated cycles set against the analytical `max(load, sim, lut)` model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SteadyState {
    pub simulated: u64,
    pub model: Omega,
    pub model_binding: Bound,
    pub sim_binding: Bound,
    /// The simulator's dominant unit maps to a model term equal to the
    /// maximum, so exact ties count for either side.
    pub agree: bool,
    /// `|simulated − model| / model`.
    pub rel_error: f64,
}

/// The design-space model assumes one subvector per CCU per cycle on the IMM
/// clock; its similarity term is rescaled here by the CCU initiation interval
/// and the clock ratio.
pub fn steady_state_check(trace: &SimTrace, hw: &HwConfig, shape: &ProblemShape, vq: &VqConfig) -> Result<SteadyState> {
    let point = DesignPoint {
        v: vq.v,
        c: vq.c,
        metric: vq.metric,
        dist_precision: vq.dist_precision,
        lut_precision: vq.lut_precision,
        n_ccu: hw.n_ccu,
        n_imm: hw.n_imm,
        lut_banks: hw.lut_banks,
        t_n: hw.tile.t_n,
        beta: hw.beta,
    };
    let mut model = omega(shape, &point).map_err(|e| config(e.to_string()))?;
    model.sim *= hw.ccu_interval(vq.c) as f64 * hw.imm_freq as f64 / hw.ccm_freq as f64;
    let (cycles, binding) = [(model.lut, Bound::Lut), (model.sim, Bound::Sim), (model.load, Bound::Load)]
        .into_iter()
        .fold((f64::NEG_INFINITY, Bound::Lut), |best, cur| if cur.0 > best.0 { cur } else { best });
    model.cycles = cycles;
    model.binding = binding;
    let sim_term = match trace.bottleneck {
        Bound::Lut => model.lut,
        Bound::Sim => model.sim,
        Bound::Load => model.load,
    };
    Ok(SteadyState {
        simulated: trace.total_cycles,
        model,
        model_binding: binding,
        sim_binding: trace.bottleneck,
        agree: sim_term >= cycles,
        rel_error: (trace.total_cycles as f64 - cycles).abs() / cycles,
    })
}

/// Functional simulation checked bit for bit against the LS executor.
pub fn replay_functional(a: &Matrix, b: &Matrix, codebook: &Codebook, vq: &VqConfig, hw: &HwConfig) -> Result<(SimTrace, Matrix)> {
    let (trace, out) = simulate_functional(a, b, codebook, vq, hw)?;
    let reference = ls_execute(a, b, vq, codebook, &hw.tile)?.output;
    for m in 0..out.rows() {
        for (n, (s, r)) in out.row(m).iter().zip(reference.row(m)).enumerate() {
            if s.to_bits() != r.to_bits() {
                return Err(SimError::Mismatch { m, n, simulated: *s, reference: *r });
            }
        }
    }
    Ok((trace, out))
}
