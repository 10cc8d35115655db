// SPDX-License-Identifier: Apache-2.0

use std::io::Write;
use std::ops::AddAssign;

use lutdla_dse::Bound;
use serde::{Deserialize, Serialize};

/// Non-busy cycles of a unit by cause.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stalls {
    /// Waiting for a table bank whose transfer has not started.
    pub lut_load: u64,
    /// CCU pipeline frozen because its FIFO is full.
    pub fifo_full: u64,
    /// IMM waiting for an index.
    pub fifo_empty: u64,
    /// Waiting for a table bank that is being transferred.
    pub bandwidth: u64,
    /// Writing a finished output tile back from the scratchpad.
    pub drain: u64,
    /// Out of work while other units finish.
    pub tail: u64,
}

impl Stalls {
    pub fn total(&self) -> u64 {
        self.lut_load + self.fifo_full + self.fifo_empty + self.bandwidth + self.drain + self.tail
    }
}

impl AddAssign for Stalls {
    fn add_assign(&mut self, o: Self) {
        self.lut_load += o.lut_load;
        self.fifo_full += o.fifo_full;
        self.fifo_empty += o.fifo_empty;
        self.bandwidth += o.bandwidth;
        self.drain += o.drain;
        self.tail += o.tail;
    }
}

/// Cycle accounting of one unit, in that unit's own clock.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnitStats {
    pub busy: u64,
    pub stalls: Stalls,
}

impl UnitStats {
    pub fn cycles(&self) -> u64 {
        self.busy + self.stalls.total()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Utilization {
    /// Mean fraction of CCM cycles a CCU pipeline advanced.
    pub ccm: f64,
    /// Lookups over lane capacity, `lookups / (lanes · n_IMM · cycles)`.
    pub imm: f64,
    /// Fraction of cycles the table loader was transferring.
    pub loader: f64,
}

impl Utilization {
    /// Unit with the highest utilization, ties towards lookup, then similarity.
    pub fn dominant(&self) -> Bound {
        [(self.imm, Bound::Lut), (self.ccm, Bound::Sim), (self.loader, Bound::Load)]
            .into_iter()
            .fold((f64::NEG_INFINITY, Bound::Lut), |best, cur| if cur.0 > best.0 { cur } else { best })
            .1
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceEvent {
    /// IMM cycle.
    pub cycle: u64,
    pub unit: String,
    pub action: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimTrace {
    /// IMM cycles until the last output tile is written back.
    pub total_cycles: u64,
    pub ccm_cycles: u64,
    pub ccus: Vec<UnitStats>,
    pub imms: Vec<UnitStats>,
    pub loader_busy: u64,
    pub lookups: u64,
    pub index_jobs: u64,
    pub lut_loads: u64,
    pub lut_bits: u64,
    /// Peak occupancy of each CCU's FIFO.
    pub fifo_high_water: Vec<usize>,
    /// Per-unit stalls summed; CCU entries count CCM cycles.
    pub stalls: Stalls,
    pub utilization: Utilization,
    pub bottleneck: Bound,
    /// Lookups that used an index before it was produced.
    pub causality_violations: u64,
    /// Lookups against a bank that was not resident.
    pub pingpong_violations: u64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub events: Vec<TraceEvent>,
}

impl SimTrace {
    pub fn write_events<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for e in &self.events {
            serde_json::to_writer(&mut out, e)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }
}
