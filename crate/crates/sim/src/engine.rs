// SPDX-License-Identifier: Apache-2.0

//! Event loop of the accelerator model.
//!
//! Time advances in ticks of the least common multiple of the two clocks.
//! While the CCM still produces indices every IMM cycle is stepped; once all
//! indices have crossed the FIFOs the remaining schedule only depends on
//! lookups, drains and table loads, so the loop jumps from event to event.

use std::collections::VecDeque;
use std::fmt::Write as _;

use lutdla_core::codebook::{load_subvector, nearest_centroid};
use lutdla_core::{build_lut, Codebook, Matrix, ProblemShape, PsumTable, VqConfig};

use crate::config::HwConfig;
use crate::error::{config, Result, SimError};
use crate::trace::{SimTrace, Stalls, TraceEvent, UnitStats, Utilization};

const NEVER: u64 = u64::MAX;

/// Timing-only simulation.
pub fn simulate(shape: &ProblemShape, vq: &VqConfig, hw: &HwConfig) -> Result<SimTrace> {
    hw.validate(shape, vq)?;
    Engine::new(shape, vq, hw, None).run().map(|(trace, _)| trace)
}

/// Simulation that also carries values through the datapath and returns
/// the output matrix.
pub fn simulate_functional(a: &Matrix, b: &Matrix, codebook: &Codebook, vq: &VqConfig, hw: &HwConfig) -> Result<(SimTrace, Matrix)> {
    let shape = ProblemShape::new(a.rows(), a.cols(), b.cols())?;
    hw.validate(&shape, vq)?;
    if codebook.k() != a.cols() || b.rows() != a.cols() || codebook.v() != vq.v || codebook.c() != vq.c {
        return Err(config(format!(
            "codebook (K={}, v={}, c={}) does not fit A {:?}, B {:?} and v={}, c={}",
            codebook.k(),
            codebook.v(),
            codebook.c(),
            a.shape(),
            b.shape(),
            vq.v,
            vq.c
        )));
    }
    let data = Datapath { a, codebook, table: build_lut(codebook, b, vq.lut_precision)?, out: Matrix::zeros(shape.m, shape.n), subvec: vec![0.0; vq.v] };
    let (trace, out) = Engine::new(&shape, vq, hw, Some(data)).run()?;
    Ok((trace, out.expect("functional run keeps its output")))
}

struct Datapath<'a> {
    a: &'a Matrix,
    codebook: &'a Codebook,
    table: PsumTable,
    out: Matrix,
    subvec: Vec<f64>,
}

#[derive(Clone, Copy)]
struct Geometry {
    m: usize,
    n: usize,
    n_c: usize,
    m_tile: usize,
    t_n: usize,
    n_tiles: usize,
    c: usize,
    bit_lut: u64,
}

impl Geometry {
    fn blocks(&self) -> usize {
        self.m.div_ceil(self.m_tile)
    }

    fn block_rows(&self, b: usize) -> usize {
        self.m_tile.min(self.m - b * self.m_tile)
    }

    fn width(&self, tile: usize) -> usize {
        self.t_n.min(self.n - tile * self.t_n)
    }

    /// Global position of a subvector in the CCM issue order.
    fn job(&self, block: usize, k: usize, row: usize) -> usize {
        block * self.m_tile * self.n_c + k * self.block_rows(block) + row
    }

    fn decode(&self, job: usize) -> (usize, usize) {
        let block = job / (self.m_tile * self.n_c);
        let rest = job - block * self.m_tile * self.n_c;
        let rows = self.block_rows(block);
        (block * self.m_tile + rest % rows, rest / rows)
    }
}

struct Ccu {
    next_job: usize,
    /// (job, CCM cycle at which it leaves the last dPE)
    pipe: VecDeque<(usize, u64)>,
    next_issue: u64,
    stats: UnitStats,
    finished: bool,
}

struct FifoEntry {
    job: usize,
    visible_tick: u64,
    readers_left: usize,
}

#[derive(Default)]
struct Fifo {
    entries: VecDeque<FifoEntry>,
    /// Sequence number of the front entry.
    base: usize,
    high_water: usize,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Bank {
    Free,
    Queued(usize),
    Loading(usize),
    Ready(usize),
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Phase {
    Pass,
    Drain(u64),
    Done,
}

struct Imm {
    /// (row block, output tile) in execution order.
    items: Vec<(usize, usize)>,
    pass: usize,
    row: usize,
    progress: usize,
    phase: Phase,
    banks: [Bank; 2],
    next_load: usize,
    next_pop: usize,
    /// Indices buffer, one entry per resident row: (job, first usable cycle).
    slots: Vec<Option<(usize, u64)>>,
    stats: UnitStats,
    lookups: u64,
}

impl Imm {
    fn passes(&self, n_c: usize) -> usize {
        self.items.len() * n_c
    }
}

/// Shared table loader. Transfers are served in a fixed order (row block,
/// tile position in the block, subspace, IMM) so that a faster unit can never
/// reorder the loads in front of a slower one.
struct Loader {
    order: Vec<(usize, usize)>,
    next: usize,
    /// (imm, pass, cycles left)
    current: Option<(usize, usize, u64)>,
    busy: u64,
    loads: u64,
    bits: u64,
}

struct Engine<'a> {
    g: Geometry,
    hw: HwConfig,
    interval: u64,
    latency: u64,
    imm_period: u64,
    ccm_period: u64,
    total_jobs: usize,
    readers: usize,
    ccus: Vec<Ccu>,
    fifos: Vec<Fifo>,
    imms: Vec<Imm>,
    loader: Loader,
    /// Tick at which each index left its CCU.
    produced: Vec<u64>,
    indices: Vec<u32>,
    data: Option<Datapath<'a>>,
    vq: VqConfig,
    causality: u64,
    pingpong: u64,
    events: Vec<TraceEvent>,
    cycle: u64,
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

impl<'a> Engine<'a> {
    fn new(shape: &ProblemShape, vq: &VqConfig, hw: &HwConfig, data: Option<Datapath<'a>>) -> Self {
        let n_c = vq.subspaces(shape.k);
        let g = Geometry {
            m: shape.m,
            n: shape.n,
            n_c,
            m_tile: hw.tile.m_tile,
            t_n: hw.tile.t_n,
            n_tiles: hw.tile.n_tiles(shape.n),
            c: vq.c,
            bit_lut: u64::from(vq.lut_precision.bits()),
        };
        let lcm = hw.ccm_freq / gcd(hw.ccm_freq, hw.imm_freq) * hw.imm_freq;
        let total_jobs = shape.m * n_c;
        let readers = hw.n_imm.min(g.n_tiles);
        let ccus = (0..hw.n_ccu)
            .map(|u| Ccu { next_job: u, pipe: VecDeque::new(), next_issue: 0, stats: UnitStats::default(), finished: u >= total_jobs })
            .collect();
        let imms = (0..hw.n_imm)
            .map(|i| {
                let items: Vec<_> = (0..g.blocks()).flat_map(|b| (i..g.n_tiles).step_by(hw.n_imm).map(move |t| (b, t))).collect();
                Imm {
                    phase: if items.is_empty() { Phase::Done } else { Phase::Pass },
                    items,
                    pass: 0,
                    row: 0,
                    progress: 0,
                    banks: [Bank::Free; 2],
                    next_load: 0,
                    next_pop: 0,
                    slots: vec![None; g.m_tile],
                    stats: UnitStats::default(),
                    lookups: 0,
                }
            })
            .collect();
        let functional = data.is_some();
        let imms: Vec<Imm> = imms;
        // (block, tile position within the block, subspace, imm)
        let mut keyed: Vec<((usize, usize, usize, usize), (usize, usize))> = Vec::new();
        for (i, imm) in imms.iter().enumerate() {
            for (item, &(block, _)) in imm.items.iter().enumerate() {
                let first = imm.items.iter().position(|&(b, _)| b == block).unwrap_or(item);
                for k in 0..n_c {
                    keyed.push(((block, item - first, k, i), (i, item * n_c + k)));
                }
            }
        }
        keyed.sort_unstable();
        let order = keyed.into_iter().map(|(_, req)| req).collect();
        Self {
            g,
            hw: *hw,
            interval: hw.ccu_interval(vq.c),
            latency: hw.ccu_latency(vq.c),
            imm_period: lcm / hw.imm_freq,
            ccm_period: lcm / hw.ccm_freq,
            total_jobs,
            readers,
            ccus,
            fifos: (0..hw.n_ccu).map(|_| Fifo::default()).collect(),
            imms,
            loader: Loader { order, next: 0, current: None, busy: 0, loads: 0, bits: 0 },
            produced: vec![NEVER; total_jobs],
            indices: if functional { vec![0; total_jobs] } else { Vec::new() },
            data,
            vq: *vq,
            causality: 0,
            pingpong: 0,
            events: Vec::new(),
            cycle: 0,
        }
    }

    fn event(&mut self, unit: impl Into<String>, action: impl Into<String>) {
        self.event_at(self.cycle, unit, action);
    }

    fn event_at(&mut self, cycle: u64, unit: impl Into<String>, action: impl Into<String>) {
        if self.hw.trace {
            self.events.push(TraceEvent { cycle, unit: unit.into(), action: action.into() });
        }
    }

    fn service_cycles(&self, bits: u64) -> u64 {
        match self.hw.beta {
            Some(b) if b > 0.0 => ((bits as f64 / b).ceil() as u64).max(1),
            Some(_) => NEVER,
            None => 0,
        }
    }

    fn pass_bits(&self, imm: usize, pass: usize) -> u64 {
        let (_, tile) = self.imms[imm].items[pass / self.g.n_c];
        (self.g.c * self.g.width(tile)) as u64 * self.g.bit_lut
    }

    fn ccm_done(&self) -> bool {
        self.ccus.iter().all(|c| c.finished) && self.fifos.iter().all(|f| f.entries.is_empty())
    }

    fn run(mut self) -> Result<(SimTrace, Option<Matrix>)> {
        let window = ((self.latency + self.interval + 2) * self.ccm_period).div_ceil(self.imm_period) + self.hw.sync_stages + 16;
        let mut quiet = 0u64;
        while self.imms.iter().any(|i| i.phase != Phase::Done) {
            if self.cycle >= self.hw.max_cycles {
                return Err(SimError::CycleLimit { limit: self.hw.max_cycles, stalls: self.stall_sum() });
            }
            let mut progress = self.request_loads();
            progress |= self.start_loads();
            let fast = self.ccm_done();
            let step = if fast { self.next_event() } else { 1 };
            if step == NEVER {
                return Err(self.deadlock());
            }
            let step = step.min(self.hw.max_cycles - self.cycle).max(1);
            if !fast {
                progress |= self.pop_indices();
            }
            for i in 0..self.imms.len() {
                progress |= self.advance_imm(i, step, !fast);
            }
            progress |= self.advance_loader(step);
            let t0 = self.cycle * self.imm_period;
            let t1 = t0 + step * self.imm_period;
            if fast {
                let idle = t1.div_ceil(self.ccm_period) - t0.div_ceil(self.ccm_period);
                for ccu in &mut self.ccus {
                    ccu.stats.stalls.tail += idle;
                }
            } else {
                let mut tick = t0.div_ceil(self.ccm_period) * self.ccm_period;
                while tick < t1 {
                    progress |= self.ccm_cycle(tick);
                    tick += self.ccm_period;
                }
            }
            self.cycle += step;
            quiet = if progress || fast { 0 } else { quiet + 1 };
            if quiet > window {
                return Err(self.deadlock());
            }
        }
        Ok(self.finish())
    }

    fn request_loads(&mut self) -> bool {
        let mut any = false;
        for i in 0..self.imms.len() {
            loop {
                let imm = &self.imms[i];
                let q = imm.next_load;
                if q >= imm.passes(self.g.n_c) || imm.banks[q % 2] != Bank::Free {
                    break;
                }
                self.imms[i].next_load += 1;
                any = true;
                if self.hw.beta.is_none() {
                    self.imms[i].banks[q % 2] = Bank::Ready(q);
                    self.loader.loads += 1;
                    self.loader.bits += self.pass_bits(i, q);
                } else {
                    self.imms[i].banks[q % 2] = Bank::Queued(q);
                    self.event(format!("imm{i}"), format!("request pass={q}"));
                }
            }
        }
        any
    }

    fn start_loads(&mut self) -> bool {
        if self.loader.current.is_some() || self.hw.beta.is_none() {
            return false;
        }
        let Some(&(i, q)) = self.loader.order.get(self.loader.next) else { return false };
        if self.imms[i].banks[q % 2] != Bank::Queued(q) {
            return false;
        }
        self.loader.next += 1;
        let bits = self.pass_bits(i, q);
        self.loader.loads += 1;
        self.loader.bits += bits;
        let cycles = self.service_cycles(bits);
        self.imms[i].banks[q % 2] = Bank::Loading(q);
        self.loader.current = Some((i, q, cycles));
        self.event("loader", format!("load imm={i} pass={q} cycles={cycles}"));
        true
    }

    fn advance_loader(&mut self, step: u64) -> bool {
        let Some((i, q, left)) = self.loader.current else { return false };
        self.loader.busy += step;
        if left == NEVER {
            return false;
        }
        if left <= step {
            self.imms[i].banks[q % 2] = Bank::Ready(q);
            self.loader.current = None;
            self.event_at(self.cycle + left, "loader", format!("ready imm={i} pass={q}"));
        } else {
            self.loader.current = Some((i, q, left - step));
        }
        true
    }

    /// Cycles until some unit changes state, once no index is in flight.
    fn next_event(&self) -> u64 {
        let mut step = match self.loader.current {
            Some((_, _, left)) => left,
            None => NEVER,
        };
        for imm in &self.imms {
            let own = match imm.phase {
                Phase::Done => NEVER,
                Phase::Drain(left) => left,
                Phase::Pass => match imm.banks[imm.pass % 2] {
                    Bank::Ready(p) if p == imm.pass => {
                        let (b, tile) = imm.items[imm.pass / self.g.n_c];
                        let remaining = self.g.block_rows(b) * self.g.width(tile) - (imm.row * self.g.width(tile) + imm.progress);
                        (remaining as u64).div_ceil(self.hw.lut_banks as u64)
                    }
                    _ => NEVER,
                },
            };
            step = step.min(own);
        }
        step
    }

    /// Moves visible FIFO entries into free indices-buffer slots.
    fn pop_indices(&mut self) -> bool {
        let now = self.cycle * self.imm_period;
        let n_ccu = self.hw.n_ccu;
        let mut any = false;
        for i in 0..self.readers {
            for _ in 0..n_ccu {
                let j = self.imms[i].next_pop;
                if j >= self.total_jobs {
                    break;
                }
                let fifo = &mut self.fifos[j % n_ccu];
                let Some(entry) = (j / n_ccu).checked_sub(fifo.base).and_then(|pos| fifo.entries.get_mut(pos)) else { break };
                debug_assert_eq!(entry.job, j);
                if entry.visible_tick > now {
                    break;
                }
                let (row, _) = self.g.decode(j);
                let slot = row % self.g.m_tile;
                if self.imms[i].slots[slot].is_some() {
                    break;
                }
                entry.readers_left -= 1;
                while fifo.entries.front().is_some_and(|e| e.readers_left == 0) {
                    fifo.entries.pop_front();
                    fifo.base += 1;
                }
                self.imms[i].slots[slot] = Some((j, self.cycle + 1));
                self.imms[i].next_pop += 1;
                any = true;
            }
        }
        any
    }

    fn advance_imm(&mut self, i: usize, step: u64, gated: bool) -> bool {
        match self.imms[i].phase {
            Phase::Done => {
                self.imms[i].stats.stalls.tail += step;
                false
            }
            Phase::Drain(left) => {
                self.imms[i].stats.stalls.drain += step;
                if left > step {
                    self.imms[i].phase = Phase::Drain(left - step);
                } else {
                    self.next_item(i, step);
                }
                true
            }
            Phase::Pass => {
                let pass = self.imms[i].pass;
                match self.imms[i].banks[pass % 2] {
                    Bank::Ready(p) if p == pass => {}
                    Bank::Loading(_) => {
                        self.imms[i].stats.stalls.bandwidth += step;
                        return false;
                    }
                    _ => {
                        self.imms[i].stats.stalls.lut_load += step;
                        return false;
                    }
                }
                let done = self.lookup(i, self.hw.lut_banks as u64 * step, gated);
                if done == 0 {
                    self.imms[i].stats.stalls.fifo_empty += step;
                    return false;
                }
                self.imms[i].stats.busy += step;
                self.imms[i].lookups += done;
                let (b, _) = self.imms[i].items[pass / self.g.n_c];
                if self.imms[i].row == self.g.block_rows(b) {
                    self.end_pass(i, step);
                }
                true
            }
        }
    }

    /// Spends up to `budget` lane-lookups of the current pass.
    fn lookup(&mut self, i: usize, mut budget: u64, gated: bool) -> u64 {
        let g = self.g;
        let now = self.cycle * self.imm_period;
        let imm = &self.imms[i];
        let pass = imm.pass;
        let (block, tile) = imm.items[pass / g.n_c];
        let k = pass % g.n_c;
        let width = g.width(tile);
        let rows = g.block_rows(block);
        let from_fifo = tile == i;
        let mut done = 0;
        while budget > 0 && self.imms[i].row < rows {
            let row = self.imms[i].row;
            let job = g.job(block, k, row);
            if self.imms[i].progress == 0 {
                if gated && from_fifo {
                    match self.imms[i].slots[row] {
                        Some((j, usable)) if j == job && usable <= self.cycle => {}
                        _ => break,
                    }
                }
                if self.produced[job] >= now {
                    self.causality += 1;
                }
                if self.imms[i].banks[pass % 2] != Bank::Ready(pass) {
                    self.pingpong += 1;
                }
            }
            let take = budget.min((width - self.imms[i].progress) as u64);
            budget -= take;
            done += take;
            self.imms[i].progress += take as usize;
            if self.imms[i].progress == width {
                if let Some(d) = self.data.as_mut() {
                    let m = block * g.m_tile + row;
                    let cols = tile * g.t_n..tile * g.t_n + width;
                    d.table.accumulate(k, self.indices[job] as usize, cols.clone(), &mut d.out.row_mut(m)[cols]);
                }
                if from_fifo {
                    self.imms[i].slots[row] = None;
                }
                self.imms[i].row += 1;
                self.imms[i].progress = 0;
            }
        }
        done
    }

    fn end_pass(&mut self, i: usize, step: u64) {
        let g = self.g;
        let imm = &mut self.imms[i];
        let pass = imm.pass;
        imm.banks[pass % 2] = Bank::Free;
        imm.pass += 1;
        imm.row = 0;
        imm.progress = 0;
        let at = self.cycle + step;
        if pass % g.n_c == g.n_c - 1 {
            let (b, tile) = imm.items[pass / g.n_c];
            let cycles = ((g.block_rows(b) * g.width(tile)) as u64).div_ceil(self.hw.lut_banks as u64);
            imm.phase = Phase::Drain(cycles);
            if self.hw.trace {
                self.events.push(TraceEvent { cycle: at, unit: format!("imm{i}"), action: format!("drain block={b} tile={tile}") });
            }
        } else if self.hw.trace {
            self.events.push(TraceEvent { cycle: at, unit: format!("imm{i}"), action: format!("pass={}", pass + 1) });
        }
    }

    fn next_item(&mut self, i: usize, step: u64) {
        let imm = &mut self.imms[i];
        imm.phase = if imm.pass == imm.passes(self.g.n_c) { Phase::Done } else { Phase::Pass };
        if self.hw.trace {
            let action = if imm.phase == Phase::Done { "done".to_string() } else { format!("pass={}", imm.pass) };
            self.events.push(TraceEvent { cycle: self.cycle + step, unit: format!("imm{i}"), action });
        }
    }

    /// One CCM cycle for every CCU.
    fn ccm_cycle(&mut self, tick: u64) -> bool {
        let now = tick / self.ccm_period;
        let mut any = false;
        for u in 0..self.ccus.len() {
            if self.ccus[u].finished {
                self.ccus[u].stats.stalls.tail += 1;
                continue;
            }
            let mut frozen = false;
            if let Some(&(job, ready)) = self.ccus[u].pipe.front() {
                if ready <= now {
                    if self.fifos[u].entries.len() < self.hw.fifo_depth {
                        let visible_tick = tick + self.hw.sync_stages * self.imm_period;
                        let fifo = &mut self.fifos[u];
                        fifo.entries.push_back(FifoEntry { job, visible_tick, readers_left: self.readers });
                        fifo.high_water = fifo.high_water.max(fifo.entries.len());
                        self.produced[job] = tick;
                        self.ccus[u].pipe.pop_front();
                        any = true;
                    } else {
                        frozen = true;
                    }
                }
            }
            let ccu = &mut self.ccus[u];
            if frozen {
                for entry in ccu.pipe.iter_mut() {
                    entry.1 += 1;
                }
                ccu.next_issue = ccu.next_issue.max(now + 1);
                ccu.stats.stalls.fifo_full += 1;
                continue;
            }
            if ccu.next_job < self.total_jobs && now >= ccu.next_issue {
                let job = ccu.next_job;
                ccu.pipe.push_back((job, now + self.latency));
                ccu.next_issue = now + self.interval;
                ccu.next_job += self.hw.n_ccu;
                any = true;
                if let Some(d) = self.data.as_mut() {
                    let (m, k) = self.g.decode(job);
                    load_subvector(d.a.row(m), k, self.vq.v, &mut d.subvec);
                    self.indices[job] = nearest_centroid(&d.subvec, d.codebook.subspace(k), self.vq.metric, self.vq.dist_precision);
                }
            }
            if ccu.pipe.is_empty() && ccu.next_job >= self.total_jobs {
                ccu.finished = true;
                ccu.stats.stalls.tail += 1;
                if self.hw.trace {
                    self.events.push(TraceEvent { cycle: self.cycle, unit: format!("ccu{u}"), action: "done".into() });
                }
            } else {
                ccu.stats.busy += 1;
            }
        }
        any
    }

    fn stall_sum(&self) -> Stalls {
        let mut s = Stalls::default();
        for unit in self.ccus.iter().map(|c| &c.stats).chain(self.imms.iter().map(|i| &i.stats)) {
            s += unit.stalls;
        }
        s
    }

    fn deadlock(&self) -> SimError {
        let mut state = String::new();
        for (u, f) in self.fifos.iter().enumerate() {
            let front = f.entries.front().map(|e| (e.job, e.readers_left));
            let _ = write!(state, "fifo{u}: {}/{} front={front:?}; ", f.entries.len(), self.hw.fifo_depth);
        }
        for (i, imm) in self.imms.iter().enumerate() {
            let _ = write!(state, "imm{i}: {:?} pass={} row={} banks={:?} next_pop={}; ", imm.phase, imm.pass, imm.row, imm.banks, imm.next_pop);
        }
        let _ = write!(state, "loader: {:?} next={:?}", self.loader.current, self.loader.order.get(self.loader.next));
        SimError::Deadlock { cycle: self.cycle, state, stalls: self.stall_sum() }
    }

    fn finish(self) -> (SimTrace, Option<Matrix>) {
        let total = self.cycle;
        let ccm_cycles = (total * self.imm_period).div_ceil(self.ccm_period);
        let lookups: u64 = self.imms.iter().map(|i| i.lookups).sum();
        let ratio = |x: f64, y: f64| if y > 0.0 { x / y } else { 0.0 };
        let ccm_busy: u64 = self.ccus.iter().map(|c| c.stats.busy).sum();
        let utilization = Utilization {
            ccm: ratio(ccm_busy as f64, (ccm_cycles * self.hw.n_ccu as u64) as f64),
            imm: ratio(lookups as f64, (total * (self.hw.lut_banks * self.hw.n_imm) as u64) as f64),
            loader: ratio(self.loader.busy as f64, total as f64),
        };
        let stalls = self.stall_sum();
        let trace = SimTrace {
            total_cycles: total,
            ccm_cycles,
            ccus: self.ccus.iter().map(|c| c.stats).collect(),
            imms: self.imms.iter().map(|i| i.stats).collect(),
            loader_busy: self.loader.busy,
            lookups,
            index_jobs: self.total_jobs as u64,
            lut_loads: self.loader.loads,
            lut_bits: self.loader.bits,
            fifo_high_water: self.fifos.iter().map(|f| f.high_water).collect(),
            stalls,
            bottleneck: utilization.dominant(),
            utilization,
            causality_violations: self.causality,
            pingpong_violations: self.pingpong,
            events: self.events,
        };
        (trace, self.data.map(|d| d.out))
    }
}
