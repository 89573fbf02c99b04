//! Pipelined |T> factory and catalytic |Y> factory timing.
//!
//! The |T> factory streams feed cells past a stationary buffer. A feed cell
//! leaves the buffer every `tau_mv = tau_CX/2 + tau_SE` and is teleported
//! into one of `n_mb` measurement-area cells, each of which needs
//! `tau_TY` to prepare a noisy |T> and entangle it with a |Y> before it can
//! take the next feed. The last code qubit is measured after a final
//! teleport-and-measure step.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::css_code::{builtin, Basis, BuiltinCode, StabilizerTable};
use crate::distillation::{self, DistillError, PipelineEvent, PipelinedSchedule, Postprocess, TargetGate};
use crate::game::{self, GameConfig, GameError, GridState, Mode, Op, Pos, ScheduledOp};
use crate::timing::DurationTable;

/// Cells of the compact layout that only carry routing traffic.
pub const ROUTING_CELLS: usize = 3;

/// Initial CX rounds removed by reordering the auxiliary cells.
pub const REORDER_SAVING_STEPS: usize = 2;

#[derive(Debug, Error, PartialEq)]
pub enum FactoryError {
    #[error("measurement area needs at least one cell")]
    NoMeasurementCells,
    #[error("invalid factory config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Distill(#[from] DistillError),
    #[error(transparent)]
    Game(#[from] GameError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactoryConfig {
    #[serde(skip)]
    pub code: Option<StabilizerTable>,
    pub n_mb: usize,
    /// Noisy |T> preparation time (s).
    pub tau_inject: f64,
    /// Noisy |T> preparation plus |Y> entangling time (s); derived from
    /// the durations when absent.
    pub tau_ty: Option<f64>,
    pub reorder: bool,
    pub accept_prob: f64,
    /// Replaces tau_SE inside the factory (zoned variant).
    pub se_override: Option<f64>,
}

impl FactoryConfig {
    /// The reference factory: 15-to-1, four measurement cells, injection in
    /// four SE rounds, reordered auxiliaries.
    pub fn table1(code: StabilizerTable, dur: &DurationTable) -> Self {
        Self {
            code: Some(code),
            n_mb: 4,
            tau_inject: 4.0 * dur.tau_se,
            tau_ty: None,
            reorder: true,
            accept_prob: 1.0,
            se_override: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FactoryEventKind {
    FeedLeavesBuffer,
    TeleportStart,
    CellReady,
    FinalStep,
    Done,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactoryEvent {
    pub time: f64,
    pub kind: FactoryEventKind,
    pub feed: Option<usize>,
    pub mb_cell: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactoryReport {
    pub tau_factory: f64,
    /// Mean time per accepted output with geometric retries.
    pub tau_t_avg: f64,
    /// Same without retries.
    pub tau_t_avg_no_retry: f64,
    pub space_cells: usize,
    /// Outputs of one factory per cycle of the grid.
    pub throughput_per_cycle: f64,
    pub tau_mv: f64,
    pub tau_ty: f64,
    #[serde(skip)]
    pub trace: Vec<FactoryEvent>,
}

impl FactoryReport {
    pub fn trace_csv(&self) -> String {
        let mut out = String::from("time_us,event,feed,mb_cell\n");
        for ev in &self.trace {
            let opt = |v: Option<usize>| v.map(|x| x.to_string()).unwrap_or_default();
            let kind = serde_json::to_value(ev.kind).ok().and_then(|v| v.as_str().map(str::to_owned)).unwrap_or_default();
            out.push_str(&format!("{:.3},{},{},{}\n", ev.time * 1e6, kind, opt(ev.feed), opt(ev.mb_cell)));
        }
        out
    }
}

/// Step times derived from the durations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepTimes {
    /// One CX leg between neighbouring factory cells.
    pub tau_cx_half: f64,
    pub tau_se: f64,
    pub tau_mv: f64,
    /// Parallel teleport-and-measure step.
    pub tau_tm: f64,
    pub tau_ty: f64,
}

pub fn step_times(cfg: &FactoryConfig, dur: &DurationTable) -> StepTimes {
    let tau_se = cfg.se_override.unwrap_or(dur.tau_se);
    let tau_cx_half = dur.tau_cx / 2.0;
    StepTimes {
        tau_cx_half,
        tau_se,
        tau_mv: tau_cx_half + tau_se,
        tau_tm: tau_cx_half + dur.tau_m().max(tau_se),
        tau_ty: cfg.tau_ty.unwrap_or(cfg.tau_inject + tau_cx_half + dur.tau_cx + tau_se),
    }
}

fn check(cfg: &FactoryConfig) -> Result<(), FactoryError> {
    if cfg.n_mb == 0 {
        return Err(FactoryError::NoMeasurementCells);
    }
    if !(cfg.tau_inject > 0.0) {
        return Err(FactoryError::InvalidConfig("tau_inject must be positive".into()));
    }
    if !(cfg.accept_prob > 0.0 && cfg.accept_prob <= 1.0) {
        return Err(FactoryError::InvalidConfig(format!("accept_prob {} outside (0, 1]", cfg.accept_prob)));
    }
    if cfg.tau_ty.is_some_and(|t| !(t > 0.0)) || cfg.se_override.is_some_and(|t| !(t > 0.0)) {
        return Err(FactoryError::InvalidConfig("times must be positive".into()));
    }
    Ok(())
}

fn t_pipeline(cfg: &FactoryConfig) -> Result<PipelinedSchedule, FactoryError> {
    let circ = distillation::build_circuit(&code_of(cfg), TargetGate::T, Postprocess::Detection)?;
    Ok(distillation::pipeline(&circ))
}

fn code_of(cfg: &FactoryConfig) -> StabilizerTable {
    cfg.code.clone().unwrap_or_else(|| builtin(BuiltinCode::ReedMuller15).expect("builtin code"))
}

/// Event-driven simulation of one |T> factory trial.
pub fn simulate_t_factory(cfg: &FactoryConfig, dur: &DurationTable) -> Result<FactoryReport, FactoryError> {
    check(cfg)?;
    let sched = t_pipeline(cfg)?;
    let st = step_times(cfg, dur);
    let lead = if cfg.reorder {
        sched.buffer_size.saturating_sub(REORDER_SAVING_STEPS)
    } else {
        sched.buffer_size
    };
    let mut trace = Vec::new();
    let mut ready = vec![0.0f64; cfg.n_mb];
    let mut prev: Option<f64> = None;
    let mut last_arrival = 0.0;
    for f in 0..sched.feed_count {
        let arrival = (lead + f) as f64 * st.tau_mv;
        last_arrival = arrival;
        trace.push(FactoryEvent { time: arrival, kind: FactoryEventKind::FeedLeavesBuffer, feed: Some(f), mb_cell: None });
        // earliest free cell, lowest index on ties
        let (cell, &free) = ready
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .expect("n_mb > 0");
        let start = arrival.max(free).max(prev.map_or(f64::NEG_INFINITY, |p| p + st.tau_mv));
        trace.push(FactoryEvent { time: start, kind: FactoryEventKind::TeleportStart, feed: Some(f), mb_cell: Some(cell) });
        ready[cell] = start + st.tau_ty;
        trace.push(FactoryEvent { time: ready[cell], kind: FactoryEventKind::CellReady, feed: None, mb_cell: Some(cell) });
        prev = Some(start);
    }
    let final_start = prev.map_or(0.0, |p| p + st.tau_mv).max(last_arrival + st.tau_cx_half);
    trace.push(FactoryEvent { time: final_start, kind: FactoryEventKind::FinalStep, feed: None, mb_cell: None });
    let tau_factory = final_start + st.tau_tm;
    trace.push(FactoryEvent { time: tau_factory, kind: FactoryEventKind::Done, feed: None, mb_cell: None });
    trace.sort_by(|a, b| a.time.total_cmp(&b.time));
    Ok(FactoryReport {
        tau_factory,
        tau_t_avg: tau_factory / cfg.accept_prob,
        tau_t_avg_no_retry: tau_factory,
        space_cells: sched.buffer_size + cfg.n_mb + ROUTING_CELLS + 1,
        throughput_per_cycle: dur.tau_cycle() / tau_factory,
        tau_mv: st.tau_mv,
        tau_ty: st.tau_ty,
        trace,
    })
}

/// Rule-checked mode sequence of the |T> factory on a compact grid: buffer
/// cells on row 0, the feed lane on row 1 and one measurement cell below the
/// lane end. All cells are factory-internal.
pub fn t_factory_game_ops(cfg: &FactoryConfig) -> Result<(GridState, Vec<ScheduledOp>), FactoryError> {
    let sched = t_pipeline(cfg)?;
    let circ = distillation::build_circuit(&code_of(cfg), TargetGate::T, Postprocess::Detection)?;
    let b = sched.buffer_size;
    let mut grid = GridState::new(b + 2, 3);
    for col in 0..b + 2 {
        for row in 0..3 {
            grid.mark_factory_cell(Pos::new(col, row))?;
        }
    }
    let mb = Pos::new(b + 1, 2);
    let measure = |at: Pos| match circ.measurement_basis {
        Basis::X => Op::Mx { at },
        Basis::Z => Op::Mz { at },
    };
    let mut ops: Vec<Op> = (0..b).map(|j| Op::Prep { at: Pos::new(j + 1, 0), mode: Mode::PrepPlus }).collect();
    let mut lane = 0;
    for ev in &sched.steps {
        match *ev {
            PipelineEvent::FeedInit { .. } => {
                lane = 0;
                ops.push(Op::Prep { at: Pos::new(0, 1), mode: Mode::Prep0 });
            }
            PipelineEvent::BufferCx { buffer_index, .. } => {
                while lane < buffer_index + 1 {
                    ops.push(Op::Route { from: Pos::new(lane, 1), to: Pos::new(lane + 1, 1) });
                    lane += 1;
                }
                ops.push(Op::Cx { a: Pos::new(buffer_index + 1, 0), b: Pos::new(lane, 1) });
            }
            PipelineEvent::Advance { .. } => {
                if lane < b + 1 {
                    ops.push(Op::Route { from: Pos::new(lane, 1), to: Pos::new(b + 1, 1) });
                    lane = b + 1;
                }
                ops.push(Op::Prep { at: mb, mode: Mode::PrepT });
                ops.push(Op::Cx { a: mb, b: Pos::new(lane, 1) });
            }
            PipelineEvent::MeasureTransversal { qubit } => {
                if sched.feed.contains(&qubit) {
                    ops.push(Op::Mz { at: Pos::new(lane, 1) });
                    ops.push(measure(mb));
                } else {
                    let j = sched.buffer.iter().position(|&q| q == qubit).expect("buffer qubit");
                    ops.push(measure(Pos::new(j + 1, 0)));
                }
            }
        }
    }
    Ok((grid, ops.into_iter().map(ScheduledOp::asap).collect()))
}

/// Two-cell catalytic |Y> factory: |+> is prepared in cell A, then
/// CX(A,B), H(B), CX(A,B) with the catalyst in B leaves |Y> in A and
/// Z|Y> in B (a frame correction). SE rounds follow each gate.
pub fn y_factory_ops() -> (GridState, Vec<ScheduledOp>) {
    let grid = GridState::new(2, 1);
    let (a, b) = (Pos::new(0, 0), Pos::new(1, 0));
    let ops = vec![
        Op::Prep { at: b, mode: Mode::PrepY },
        Op::Prep { at: a, mode: Mode::PrepPlus },
        Op::Cx { a, b },
        Op::Se { at: a },
        Op::Se { at: b },
        Op::H { at: b },
        Op::Se { at: b },
        Op::Cx { a, b },
        Op::Se { at: a },
        Op::Se { at: b },
    ];
    (grid, ops.into_iter().map(ScheduledOp::asap).collect())
}

/// Per-|Y> time from replaying the catalytic sequence through the game
/// engine. The catalyst preparation is a one-off bootstrap and is not
/// counted.
pub fn simulate_y_factory(dur: &DurationTable) -> Result<FactoryReport, FactoryError> {
    let (mut grid, ops) = y_factory_ops();
    // the catalyst is already in place
    let b = grid.cell_at(Pos::new(1, 0)).expect("cell");
    grid.cells[b].mode = Mode::Idle;
    let tl = game::run_schedule(&grid, &ops[1..], &GameConfig::default(), dur)?;
    let tau = tl.makespan;
    Ok(FactoryReport {
        tau_factory: tau,
        tau_t_avg: tau,
        tau_t_avg_no_retry: tau,
        space_cells: 2,
        throughput_per_cycle: dur.tau_cycle() / tau,
        tau_mv: 0.0,
        tau_ty: 0.0,
        trace: vec![],
    })
}

/// `n * tau_cycle / tau_factory`, the unfloored output rate per cycle.
pub fn aggregate_throughput(n_factories: usize, report: &FactoryReport, tau_cycle: f64) -> f64 {
    if n_factories == 0 {
        return 0.0;
    }
    n_factories as f64 * tau_cycle / report.tau_factory
}

/// Rate actually consumed when demand is below capacity.
pub fn delivered_throughput(capacity: f64, demand_per_cycle: f64) -> f64 {
    capacity.min(demand_per_cycle.max(0.0))
}
