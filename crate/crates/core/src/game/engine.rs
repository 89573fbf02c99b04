//! Discrete-event execution of schedules with automatic SE interposition.
//!
//! Operations run in list order. Each starts at the later of its requested
//! time and the moment all participants are free. Between operations a cell
//! is either `Idle` (accruing error) or `Empty`. Whenever an idle cell's
//! accumulated error reaches the budget, an SE is inserted at exactly that
//! instant. Gates are checked section by section: H in `h_segments` parts,
//! CX in two shuttle legs, and routing in single-pitch swaps. If a section
//! would push a participant over the budget, an SE on all participants
//! goes first.

use serde::{Deserialize, Serialize};

use super::{
    check_mode_transition, validate_transition, Action, GameConfig, GameError, GridState, Mode, Pos, Rule, Slot,
    Violation,
};
use crate::timing::DurationTable;

const EPS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Op {
    Prep { at: Pos, mode: Mode },
    Se { at: Pos },
    H { at: Pos },
    Cx { a: Pos, b: Pos },
    Route { from: Pos, to: Pos },
    Mx { at: Pos },
    Mz { at: Pos },
    /// Keep the cell idle for `duration` seconds of idle time.
    Idle { at: Pos, duration: f64 },
}

impl Op {
    fn rule(&self) -> Rule {
        match self {
            Op::Prep { .. } => Rule::R1,
            Op::Se { .. } | Op::Idle { .. } => Rule::R2,
            Op::H { .. } => Rule::R3,
            Op::Cx { .. } => Rule::R4,
            Op::Route { .. } => Rule::R5,
            Op::Mx { .. } | Op::Mz { .. } => Rule::R6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduledOp {
    /// Earliest start; `None` means as soon as possible.
    pub time: Option<f64>,
    pub op: Op,
    /// Source line for diagnostics (0 when built in code).
    pub line: usize,
}

impl ScheduledOp {
    pub fn asap(op: Op) -> Self {
        Self { time: None, op, line: 0 }
    }

    pub fn at(time: f64, op: Op) -> Self {
        Self {
            time: Some(time),
            op,
            line: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Scheduled,
    Interposed,
    Rest,
    Swap,
}

/// A cell (or pair) occupying mode `to` over `[time, time + duration)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub time: f64,
    pub duration: f64,
    pub cells: Vec<usize>,
    pub positions: Vec<Pos>,
    pub from: Mode,
    pub to: Mode,
    pub kind: EventKind,
    pub rule: Rule,
    pub acc_after: Vec<f64>,
}

impl Event {
    pub fn end(&self) -> f64 {
        self.time + self.duration
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timeline {
    pub events: Vec<Event>,
    pub makespan: f64,
    pub final_grid: GridState,
    /// Interposed SE count per cell id.
    pub se_counts: Vec<usize>,
    pub max_acc: f64,
}

impl Timeline {
    pub fn interposed_total(&self) -> usize {
        self.se_counts.iter().sum()
    }
}

enum Target {
    Until(f64),
    For(f64),
}

struct IdlePlan {
    ses: Vec<f64>,
    end: f64,
    acc: f64,
}

struct Engine<'a> {
    g: GridState,
    cfg: &'a GameConfig,
    dur: &'a DurationTable,
    ready: Vec<f64>,
    idle_start: Vec<f64>,
    idle_from: Vec<Mode>,
    events: Vec<Event>,
    se_counts: Vec<usize>,
    max_acc: f64,
}

fn rule_into(from: Mode, to: Mode) -> Rule {
    check_mode_transition(from, to, Some(from)).map_or(Rule::R2, |r| r)
}

impl<'a> Engine<'a> {
    fn tau_se(&self) -> f64 {
        self.dur.tau_se * self.cfg.se_rounds as f64
    }

    fn push(&mut self, mut ev: Event) {
        ev.acc_after = ev.cells.iter().map(|&c| self.g.cells[c].acc_error).collect();
        ev.positions = ev.cells.iter().map(|&c| self.g.cells[c].pos).collect();
        for &a in &ev.acc_after {
            self.max_acc = self.max_acc.max(a);
        }
        self.events.push(ev);
    }

    fn event(&mut self, time: f64, duration: f64, cells: &[usize], from: Mode, to: Mode, kind: EventKind, rule: Rule) {
        self.push(Event {
            time,
            duration,
            cells: cells.to_vec(),
            positions: vec![],
            from,
            to,
            kind,
            rule,
            acc_after: vec![],
        });
    }

    fn plan_idle(&self, c: usize, target: Target) -> IdlePlan {
        let r = self.cfg.rates.idle;
        let pb = self.cfg.p_budget;
        let tse = self.tau_se();
        let mut t = self.ready[c];
        let mut acc = self.g.cells[c].acc_error;
        let mut ses = Vec::new();
        match target {
            Target::Until(s) => loop {
                if t >= s {
                    break;
                }
                if r > 0.0 {
                    let hit = t + (pb - acc).max(0.0) / r;
                    if hit < s - EPS {
                        ses.push(hit);
                        t = hit + tse;
                        acc = 0.0;
                        continue;
                    }
                }
                acc += r * (s - t);
                t = s;
                break;
            },
            Target::For(mut left) => loop {
                if r > 0.0 {
                    let need = (pb - acc).max(0.0) / r;
                    if need < left - EPS {
                        t += need;
                        left -= need;
                        ses.push(t);
                        t += tse;
                        acc = 0.0;
                        continue;
                    }
                }
                t += left;
                acc += r * left;
                break;
            },
        }
        IdlePlan { ses, end: t, acc }
    }

    fn commit_idle(&mut self, c: usize, plan: IdlePlan) {
        let tse = self.tau_se();
        for hit in plan.ses {
            let from = self.idle_from[c];
            self.g.cells[c].acc_error = self.cfg.p_budget;
            self.event(self.idle_start[c], hit - self.idle_start[c], &[c], from, Mode::Idle, EventKind::Rest, rule_into(from, Mode::Idle));
            self.g.cells[c].acc_error = 0.0;
            self.event(hit, tse, &[c], Mode::Idle, Mode::SE, EventKind::Interposed, Rule::E3);
            self.se_counts[c] += 1;
            self.idle_start[c] = hit + tse;
            self.idle_from[c] = Mode::SE;
        }
        self.g.cells[c].acc_error = plan.acc;
        self.ready[c] = plan.end;
    }

    /// Earliest common start for `cells` no earlier than `req`.
    fn sync(&self, cells: &[usize], req: f64) -> f64 {
        let mut s = cells.iter().map(|&c| self.ready[c]).fold(req, f64::max);
        loop {
            let mut next = s;
            for &c in cells {
                if self.g.cells[c].mode == Mode::Idle {
                    next = next.max(self.plan_idle(c, Target::Until(s)).end);
                }
            }
            if next <= s + EPS {
                // never start a hair before a participant is free
                return next;
            }
            s = next;
        }
    }

    fn advance(&mut self, cells: &[usize], s: f64) {
        for &c in cells {
            if self.g.cells[c].mode == Mode::Idle {
                let plan = self.plan_idle(c, Target::Until(s));
                self.commit_idle(c, plan);
            }
            self.ready[c] = self.ready[c].max(s);
        }
    }

    fn close_idle(&mut self, c: usize, t: f64) {
        let from = self.idle_from[c];
        self.event(self.idle_start[c], t - self.idle_start[c], &[c], from, Mode::Idle, EventKind::Rest, rule_into(from, Mode::Idle));
    }

    fn open_idle(&mut self, c: usize, t: f64, from: Mode) {
        let cell = &mut self.g.cells[c];
        cell.mode = Mode::Idle;
        cell.mode_entry_time = t;
        cell.pending_gate_progress = 0.0;
        self.ready[c] = t;
        self.idle_start[c] = t;
        self.idle_from[c] = from;
    }

    fn cell(&self, p: Pos, rule: Rule) -> Result<usize, Violation> {
        match self.g.slot(p) {
            Some(Slot::Cell(id)) => Ok(id),
            Some(Slot::Factory(_)) => Err(Violation::new(rule, format!("{p} is a factory slot"))),
            None => Err(Violation::new(rule, format!("{p} is outside the grid"))),
        }
    }

    /// Runs `nseg` sections of `seg` seconds in `mode`, each adding `inc` to
    /// every participant, interposing SE where a section would overflow.
    fn segmented(&mut self, cells: &[usize], mode: Mode, seg: f64, nseg: usize, inc: f64, rule: Rule, start: f64) -> Result<f64, Violation> {
        let pb = self.cfg.p_budget;
        if inc > pb + EPS {
            return Err(Violation::new(
                Rule::E3,
                format!("one {mode} section adds {inc:.3e}, above the budget {pb:.3e}; infeasible"),
            ));
        }
        let tse = self.tau_se();
        let mut t = start;
        let mut prev = Mode::Idle;
        let mut stretch: Option<(f64, Mode)> = None;
        for c in cells {
            self.g.cells[*c].mode = mode;
            self.g.cells[*c].mode_entry_time = start;
        }
        for i in 0..nseg {
            if cells.iter().any(|&c| self.g.cells[c].acc_error + inc > pb + EPS) {
                if let Some((t0, from)) = stretch.take() {
                    self.event(t0, t - t0, cells, from, mode, EventKind::Scheduled, rule);
                    prev = mode;
                }
                for &c in cells {
                    self.g.cells[c].acc_error = 0.0;
                    self.se_counts[c] += 1;
                }
                self.event(t, tse, cells, prev, Mode::SE, EventKind::Interposed, Rule::E3);
                t += tse;
                if prev == Mode::Idle {
                    // the gate has not started: return to idle before entering it
                    self.event(t, 0.0, cells, Mode::SE, Mode::Idle, EventKind::Rest, Rule::R2);
                } else {
                    prev = Mode::SE;
                }
            }
            if stretch.is_none() {
                stretch = Some((t, prev));
            }
            for &c in cells {
                self.g.cells[c].acc_error += inc;
                self.g.cells[c].pending_gate_progress = (i + 1) as f64 / nseg as f64;
            }
            t += seg;
        }
        if let Some((t0, from)) = stretch {
            self.event(t0, t - t0, cells, from, mode, EventKind::Scheduled, rule);
        }
        Ok(t)
    }

    fn require(&self, c: usize, action: Action, resume: Option<Mode>) -> Result<Rule, Violation> {
        validate_transition(&self.g, c, action, resume)
    }

    fn exec(&mut self, sop: &ScheduledOp) -> Result<(), Violation> {
        let req = sop.time.unwrap_or(0.0);
        let rule = sop.op.rule();
        match sop.op {
            Op::Prep { at, mode } => {
                if !mode.is_prep() {
                    return Err(Violation::new(Rule::R1, format!("{mode} is not a preparation mode")));
                }
                let c = self.cell(at, rule)?;
                self.require(c, Action::Enter(mode), None)?;
                let s = self.sync(&[c], req);
                let tau = match mode {
                    Mode::Prep0 => self.dur.tau_prep0,
                    Mode::PrepPlus => self.dur.tau_prep_plus,
                    Mode::PrepT => self.dur.tau_prep_t,
                    Mode::PrepY => self.dur.tau_prep_y,
                    _ => self.dur.tau_prep_phi,
                };
                self.g.cells[c].acc_error = self.cfg.prep_errors.of(mode);
                self.g.cells[c].mode = mode;
                self.event(s, tau, &[c], Mode::Empty, mode, EventKind::Scheduled, Rule::R1);
                self.open_idle(c, s + tau, mode);
            }
            Op::Se { at } => {
                let c = self.cell(at, rule)?;
                self.require(c, Action::Enter(Mode::SE), None)?;
                let s = self.sync(&[c], req);
                self.advance(&[c], s);
                self.close_idle(c, s);
                self.g.cells[c].acc_error = 0.0;
                let tse = self.tau_se();
                self.event(s, tse, &[c], Mode::Idle, Mode::SE, EventKind::Scheduled, Rule::R2);
                self.open_idle(c, s + tse, Mode::SE);
            }
            Op::H { at } => {
                let c = self.cell(at, rule)?;
                self.require(c, Action::Enter(Mode::H), None)?;
                let s = self.sync(&[c], req);
                self.advance(&[c], s);
                self.close_idle(c, s);
                let n = self.cfg.h_segments;
                let seg = self.dur.tau_h / n as f64;
                let inc = self.cfg.rates.h * seg;
                let end = self.segmented(&[c], Mode::H, seg, n, inc, Rule::R3, s)?;
                self.open_idle(c, end, Mode::H);
            }
            Op::Cx { a, b } => {
                let ca = self.cell(a, rule)?;
                let cb = self.cell(b, rule)?;
                self.require(ca, Action::EnterCx { partner: cb }, None)?;
                let cells = [ca, cb];
                let s = self.sync(&cells, req);
                self.advance(&cells, s);
                for c in cells {
                    self.close_idle(c, s);
                }
                let legs = if self.g.cells[ca].in_factory && self.g.cells[cb].in_factory { 1 } else { 2 };
                let seg = self.dur.tau_cx / 2.0;
                let inc = 2.0 * self.cfg.rates.cx * seg;
                let end = self.segmented(&cells, Mode::CX, seg, legs, inc, Rule::R4, s)?;
                for c in cells {
                    self.open_idle(c, end, Mode::CX);
                }
            }
            Op::Route { from, to } => {
                let c = self.cell(from, rule)?;
                if self.g.cells[c].mode != Mode::Idle {
                    return Err(Violation::new(Rule::R5, format!("only idle cells route, {from} is {}", self.g.cells[c].mode)));
                }
                let path = straight_path(from, to);
                for p in &path {
                    if self.g.cell_at(*p).is_none_or(|e| self.g.cells[e].mode != Mode::Empty) {
                        return Err(Violation::new(Rule::R5, format!("routing blocked at {p}")));
                    }
                }
                let mut next_req = req;
                for p in path {
                    let e = self.g.cell_at(p).expect("checked above");
                    self.require(c, Action::Swap { with: e }, None)?;
                    let mut s = self.sync(&[c, e], next_req);
                    self.advance(&[c, e], s);
                    let inc = self.cfg.rates.idle * self.dur.tau_swap;
                    if inc > self.cfg.p_budget + EPS {
                        return Err(Violation::new(Rule::E3, "a single swap exceeds the error budget; infeasible"));
                    }
                    if self.g.cells[c].acc_error + inc > self.cfg.p_budget + EPS {
                        self.close_idle(c, s);
                        self.g.cells[c].acc_error = 0.0;
                        self.se_counts[c] += 1;
                        let tse = self.tau_se();
                        self.event(s, tse, &[c], Mode::Idle, Mode::SE, EventKind::Interposed, Rule::E3);
                        s += tse;
                        self.open_idle(c, s, Mode::SE);
                    }
                    self.close_idle(c, s);
                    let ts = self.dur.tau_swap;
                    self.event(s, ts, &[c, e], Mode::Idle, Mode::Idle, EventKind::Swap, Rule::R5);
                    self.g.swap_cells(c, e);
                    self.g.cells[c].acc_error += inc;
                    self.ready[e] = s + ts;
                    self.open_idle(c, s + ts, Mode::Idle);
                    next_req = s + ts;
                }
            }
            Op::Mx { at } | Op::Mz { at } => {
                let m = if matches!(sop.op, Op::Mx { .. }) { Mode::MX } else { Mode::MZ };
                let c = self.cell(at, rule)?;
                self.require(c, Action::Enter(m), None)?;
                let s = self.sync(&[c], req);
                self.advance(&[c], s);
                self.close_idle(c, s);
                self.g.cells[c].acc_error = 0.0;
                let tau = if m == Mode::MX { self.dur.tau_mx } else { self.dur.tau_mz };
                self.event(s, tau, &[c], Mode::Idle, m, EventKind::Scheduled, Rule::R6);
                let cell = &mut self.g.cells[c];
                cell.mode = Mode::Empty;
                cell.mode_entry_time = s + tau;
                self.ready[c] = s + tau;
            }
            Op::Idle { at, duration } => {
                let c = self.cell(at, rule)?;
                let m = self.g.cells[c].mode;
                if m != Mode::Idle {
                    let rule = if m == Mode::Empty { Rule::R1 } else { Rule::R2 };
                    return Err(Violation::new(rule, format!("cell at {at} is {m}, not idle")));
                }
                if !(duration >= 0.0) {
                    return Err(Violation::new(Rule::R2, "negative idle duration"));
                }
                let s = self.sync(&[c], req);
                self.advance(&[c], s);
                let plan = self.plan_idle(c, Target::For(duration));
                self.commit_idle(c, plan);
            }
        }
        Ok(())
    }
}

/// Positions visited moving from `a` to `b`, horizontal leg first,
/// excluding `a` itself.
pub fn straight_path(a: Pos, b: Pos) -> Vec<Pos> {
    let mut out = Vec::new();
    let mut p = a;
    while p.col != b.col {
        p.col = if b.col > p.col { p.col + 1 } else { p.col - 1 };
        out.push(p);
    }
    while p.row != b.row {
        p.row = if b.row > p.row { p.row + 1 } else { p.row - 1 };
        out.push(p);
    }
    out
}

/// Executes `schedule` on `grid` and returns the event timeline.
pub fn run_schedule(
    grid: &GridState,
    schedule: &[ScheduledOp],
    cfg: &GameConfig,
    dur: &DurationTable,
) -> Result<Timeline, GameError> {
    cfg.validate()?;
    let n = grid.cells.len();
    let mut eng = Engine {
        g: grid.clone(),
        cfg,
        dur,
        ready: vec![0.0; n],
        idle_start: vec![0.0; n],
        idle_from: vec![Mode::Idle; n],
        events: Vec::new(),
        se_counts: vec![0; n],
        max_acc: 0.0,
    };
    for c in 0..n {
        eng.max_acc = eng.max_acc.max(grid.cells[c].acc_error);
    }
    for sop in schedule {
        eng.exec(sop).map_err(|v| v.at(sop.line))?;
    }
    let makespan = eng
        .events
        .iter()
        .map(Event::end)
        .chain(eng.ready.iter().copied())
        .fold(0.0, f64::max);
    for c in 0..n {
        if eng.g.cells[c].mode == Mode::Idle {
            let plan = eng.plan_idle(c, Target::Until(makespan));
            eng.commit_idle(c, plan);
            let t = eng.ready[c];
            eng.close_idle(c, t);
        }
    }
    let mut events = eng.events;
    events.sort_by(|a, b| a.time.total_cmp(&b.time));
    let makespan = events.iter().map(Event::end).fold(makespan, f64::max);
    Ok(Timeline {
        events,
        makespan,
        final_grid: eng.g,
        se_counts: eng.se_counts,
        max_acc: eng.max_acc,
    })
}

/// Replays a timeline against the rule set: per-cell mode chains, CX and
/// swap adjacency, factory adjacency for resource preparation, per-cell
/// non-overlap, and the error budget at every event boundary.
pub fn validate_timeline(initial: &GridState, tl: &Timeline, cfg: &GameConfig) -> Result<(), Violation> {
    let n = initial.cells.len();
    let mut cur: Vec<Mode> = initial.cells.iter().map(|c| c.mode).collect();
    let mut resume: Vec<Option<Mode>> = vec![None; n];
    let mut busy_until = vec![f64::NEG_INFINITY; n];
    for (k, ev) in tl.events.iter().enumerate() {
        let ctx = |msg: String| Violation::new(ev.rule, format!("event {k} at t={:.6e}: {msg}", ev.time));
        if ev.acc_after.iter().any(|&a| a > cfg.p_budget + EPS) {
            return Err(Violation::new(Rule::E3, format!("event {k} leaves a cell above the budget")));
        }
        if matches!(ev.to, Mode::CX) || ev.kind == EventKind::Swap {
            if ev.positions.len() != 2 || !ev.positions[0].adjacent(ev.positions[1]) {
                return Err(ctx(format!("{} between non-adjacent cells", ev.to)));
            }
        }
        if let Some(kind) = ev.to.factory_kind() {
            let c = ev.cells[0];
            if !initial.cells[c].in_factory && !initial.adjacent_factory(ev.positions[0], kind) {
                return Err(Violation::new(Rule::R1, format!("event {k}: {} away from a factory", ev.to)));
            }
        }
        for (i, &c) in ev.cells.iter().enumerate() {
            if ev.time < busy_until[c] - 1e-9 {
                return Err(ctx(format!("cell {c} double-booked")));
            }
            busy_until[c] = ev.end();
            if ev.kind == EventKind::Swap && i == 1 {
                if cur[c] != Mode::Empty && !cur[c].is_measure() {
                    return Err(Violation::new(Rule::R5, format!("event {k}: swap partner is {}", cur[c])));
                }
                cur[c] = Mode::Empty;
                continue;
            }
            let implicit_empty = cur[c].is_measure() && ev.from == Mode::Empty;
            if ev.from != cur[c] && !implicit_empty {
                return Err(ctx(format!("cell {c} is {} but event starts from {}", cur[c], ev.from)));
            }
            if ev.from != Mode::Idle || ev.to != Mode::Idle || ev.kind != EventKind::Rest {
                check_mode_transition(ev.from, ev.to, resume[c]).map_err(|v| Violation::new(v.rule, format!("event {k}: {}", v.message)))?;
            }
            resume[c] = match (ev.from, ev.to) {
                (Mode::H | Mode::CX, Mode::SE) => Some(ev.from),
                (Mode::SE, Mode::H | Mode::CX) => None,
                (_, Mode::SE) => None,
                _ => resume[c],
            };
            cur[c] = ev.to;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::super::FactoryKind;
    use super::*;

    fn pinned() -> DurationTable {
        DurationTable::pinned()
    }

    fn p(c: usize, r: usize) -> Pos {
        Pos::new(c, r)
    }

    #[test]
    fn empty_schedule() {
        let g = GridState::new(3, 3);
        let tl = run_schedule(&g, &[], &GameConfig::default(), &pinned()).unwrap();
        assert!(tl.events.is_empty());
        assert_eq!(tl.makespan, 0.0);
    }

    #[test]
    fn prep_then_measure() {
        let g = GridState::new(1, 1);
        let sched = [
            ScheduledOp::asap(Op::Prep { at: p(0, 0), mode: Mode::Prep0 }),
            ScheduledOp::asap(Op::Mz { at: p(0, 0) }),
        ];
        let d = pinned();
        let tl = run_schedule(&g, &sched, &GameConfig::default(), &d).unwrap();
        assert_eq!(tl.events.len(), 3);
        assert!((tl.makespan - (d.tau_prep0 + d.tau_mz)).abs() < 1e-15);
        assert_eq!(tl.final_grid.cells[0].mode, Mode::Empty);
        validate_timeline(&g, &tl, &GameConfig::default()).unwrap();
    }

    #[test]
    fn idle_interposition_closed_form() {
        let cfg = GameConfig::default();
        let g = GridState::new(1, 1);
        for (t_idle, want) in [(0.5e-3, 0), (1e-3, 0), (1.0001e-3, 1), (2e-3, 1), (5.5e-3, 5), (10e-3, 9)] {
            let sched = [
                ScheduledOp::asap(Op::Prep { at: p(0, 0), mode: Mode::Prep0 }),
                ScheduledOp::asap(Op::Se { at: p(0, 0) }),
                ScheduledOp::asap(Op::Idle { at: p(0, 0), duration: t_idle }),
            ];
            let tl = run_schedule(&g, &sched, &cfg, &pinned()).unwrap();
            let closed = ((cfg.rates.idle * t_idle / cfg.p_budget) - 1e-9).ceil() as usize - 1;
            assert_eq!(tl.se_counts[0], want, "T={t_idle}");
            assert_eq!(tl.se_counts[0], closed);
            validate_timeline(&g, &tl, &cfg).unwrap();
        }
    }

    #[test]
    fn h_split_by_se() {
        let cfg = GameConfig {
            rates: super::super::Rates { idle: 10.0, h: 150.0, cx: 10.0 },
            ..GameConfig::default()
        };
        let g = GridState::new(1, 1);
        let sched = [
            ScheduledOp::asap(Op::Prep { at: p(0, 0), mode: Mode::Prep0 }),
            ScheduledOp::asap(Op::H { at: p(0, 0) }),
            ScheduledOp::asap(Op::H { at: p(0, 0) }),
        ];
        let tl = run_schedule(&g, &sched, &cfg, &pinned()).unwrap();
        assert!(tl.interposed_total() >= 1);
        assert!(tl.events.iter().any(|e| e.from == Mode::H && e.to == Mode::SE));
        assert!(tl.max_acc <= cfg.p_budget + 1e-12);
        validate_timeline(&g, &tl, &cfg).unwrap();
    }

    #[test]
    fn infeasible_section() {
        let cfg = GameConfig {
            rates: super::super::Rates { idle: 10.0, h: 1000.0, cx: 10.0 },
            ..GameConfig::default()
        };
        let g = GridState::new(1, 1);
        let sched = [
            ScheduledOp::asap(Op::Prep { at: p(0, 0), mode: Mode::Prep0 }),
            ScheduledOp::asap(Op::H { at: p(0, 0) }),
        ];
        let err = run_schedule(&g, &sched, &cfg, &pinned()).unwrap_err();
        assert!(matches!(err, GameError::Violation(Violation { rule: Rule::E3, .. })));
    }

    #[test]
    fn cx_waits_for_both() {
        let g = GridState::new(2, 1);
        let d = pinned();
        let sched = [
            ScheduledOp::asap(Op::Prep { at: p(0, 0), mode: Mode::Prep0 }),
            ScheduledOp::at(0.5e-3, Op::Prep { at: p(1, 0), mode: Mode::PrepPlus }),
            ScheduledOp::asap(Op::Cx { a: p(0, 0), b: p(1, 0) }),
        ];
        let tl = run_schedule(&g, &sched, &GameConfig::default(), &d).unwrap();
        let cx = tl.events.iter().find(|e| e.to == Mode::CX).unwrap();
        assert!((cx.time - (0.5e-3 + d.tau_prep_plus)).abs() < 1e-12);
        assert!((cx.duration - d.tau_cx).abs() < 1e-15);
        validate_timeline(&g, &tl, &GameConfig::default()).unwrap();
    }

    #[test]
    fn factory_cx_uses_one_leg() {
        let mut g = GridState::new(2, 1);
        g.mark_factory_cell(p(0, 0)).unwrap();
        g.mark_factory_cell(p(1, 0)).unwrap();
        let d = pinned();
        let sched = [
            ScheduledOp::asap(Op::Prep { at: p(0, 0), mode: Mode::PrepT }),
            ScheduledOp::asap(Op::Prep { at: p(1, 0), mode: Mode::Prep0 }),
            ScheduledOp::asap(Op::Cx { a: p(0, 0), b: p(1, 0) }),
        ];
        let tl = run_schedule(&g, &sched, &GameConfig::default(), &d).unwrap();
        let cx = tl.events.iter().find(|e| e.to == Mode::CX).unwrap();
        assert!((cx.duration - d.tau_cx / 2.0).abs() < 1e-15);
    }

    #[test]
    fn routing_moves_and_blocks() {
        let g = GridState::new(4, 2);
        let d = pinned();
        let ok = [
            ScheduledOp::asap(Op::Prep { at: p(0, 0), mode: Mode::Prep0 }),
            ScheduledOp::asap(Op::Route { from: p(0, 0), to: p(3, 0) }),
            ScheduledOp::asap(Op::Mz { at: p(3, 0) }),
        ];
        let tl = run_schedule(&g, &ok, &GameConfig::default(), &d).unwrap();
        assert_eq!(tl.events.iter().filter(|e| e.kind == EventKind::Swap).count(), 3);
        assert_eq!(tl.final_grid.cells[0].pos, p(3, 0));
        validate_timeline(&g, &tl, &GameConfig::default()).unwrap();

        let blocked = [
            ScheduledOp::asap(Op::Prep { at: p(0, 0), mode: Mode::Prep0 }),
            ScheduledOp::asap(Op::Prep { at: p(2, 0), mode: Mode::Prep0 }),
            ScheduledOp { time: None, op: Op::Route { from: p(0, 0), to: p(3, 0) }, line: 7 },
        ];
        let err = run_schedule(&g, &blocked, &GameConfig::default(), &d).unwrap_err();
        assert_eq!(
            err,
            GameError::Violation(Violation {
                rule: Rule::R5,
                line: Some(7),
                message: "routing blocked at 2,0".into()
            })
        );
    }

    #[test]
    fn illegal_ops_name_their_rule() {
        let mut g = GridState::new(3, 3);
        g.add_factory(p(0, 0), FactoryKind::T).unwrap();
        let cfg = GameConfig::default();
        let d = pinned();
        let cases: Vec<(Vec<Op>, Rule)> = vec![
            (vec![Op::H { at: p(1, 1) }], Rule::R1),
            (vec![Op::Prep { at: p(2, 2), mode: Mode::PrepT }], Rule::R1),
            (
                vec![
                    Op::Prep { at: p(1, 1), mode: Mode::Prep0 },
                    Op::Prep { at: p(1, 1), mode: Mode::Prep0 },
                ],
                Rule::R1,
            ),
            (
                vec![
                    Op::Prep { at: p(0, 2), mode: Mode::Prep0 },
                    Op::Prep { at: p(2, 2), mode: Mode::Prep0 },
                    Op::Cx { a: p(0, 2), b: p(2, 2) },
                ],
                Rule::R4,
            ),
            (vec![Op::Mz { at: p(1, 1) }], Rule::R1),
            (vec![Op::Prep { at: p(1, 1), mode: Mode::Prep0 }, Op::Mz { at: p(1, 1) }, Op::H { at: p(1, 1) }], Rule::R1),
        ];
        for (ops, rule) in cases {
            let sched: Vec<_> = ops.into_iter().map(ScheduledOp::asap).collect();
            match run_schedule(&g, &sched, &cfg, &d) {
                Err(GameError::Violation(v)) => assert_eq!(v.rule, rule, "{v}"),
                other => panic!("expected violation, got {other:?}"),
            }
        }
        let ok = [ScheduledOp::asap(Op::Prep { at: p(1, 0), mode: Mode::PrepT })];
        assert!(run_schedule(&g, &ok, &cfg, &d).is_ok());
    }

    #[test]
    fn deterministic_output() {
        let g = GridState::new(3, 3);
        let sched = [
            ScheduledOp::asap(Op::Prep { at: p(0, 0), mode: Mode::Prep0 }),
            ScheduledOp::asap(Op::Prep { at: p(1, 0), mode: Mode::PrepPlus }),
            ScheduledOp::asap(Op::Cx { a: p(0, 0), b: p(1, 0) }),
            ScheduledOp::at(5e-3, Op::H { at: p(0, 0) }),
        ];
        let a = run_schedule(&g, &sched, &GameConfig::default(), &pinned()).unwrap();
        let b = run_schedule(&g, &sched, &GameConfig::default(), &pinned()).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }
}
