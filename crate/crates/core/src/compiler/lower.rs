use serde::{Deserialize, Serialize};

use super::route::{route, route_to_adjacent};
use super::{CircuitGate, CompileError, Correction, LogicalCircuit, ResourceState, Step};
use crate::css_code::Basis;
use crate::game::{FactoryKind, GridState, Mode, Op, Pos, ScheduledOp};
use crate::stab_oracle::Gate;
use crate::timing::DurationTable;

/// Grid geometry: factory row, port corridor, then the logical region one
/// column to the right of the corridor column.
#[derive(Debug, Clone, PartialEq)]
pub struct Layout {
    pub region_cols: usize,
    pub region_rows: usize,
    pub grid: GridState,
    homes: Vec<Pos>,
    t_ports: Vec<Pos>,
    y_ports: Vec<Pos>,
}

const REGION_TOP: usize = 2;

fn is_corridor_row(r: usize) -> bool {
    r % 3 == 2
}

impl Layout {
    pub fn new(region_cols: usize, region_rows: usize) -> Result<Self, CompileError> {
        if region_cols < 2 || region_rows == 0 {
            return Err(CompileError::BadLayout(format!(
                "region {region_cols}x{region_rows} needs at least two columns and one row"
            )));
        }
        // a final data row of the second kind needs a corridor below it
        let bottom = usize::from((region_rows - 1) % 3 == 1);
        let cols = region_cols + 1;
        let rows = REGION_TOP + region_rows + bottom;
        let mut grid = GridState::new(cols, rows);
        let (mut t_ports, mut y_ports) = (vec![], vec![]);
        for c in 1..cols {
            let kind = if (c - 1) % 2 == 0 { FactoryKind::T } else { FactoryKind::Y };
            grid.add_factory(Pos::new(c, 0), kind).map_err(|e| CompileError::BadLayout(e.to_string()))?;
            match kind {
                FactoryKind::T => t_ports.push(Pos::new(c, 1)),
                _ => y_ports.push(Pos::new(c, 1)),
            }
        }
        let data_rows: Vec<usize> = (0..region_rows).filter(|&r| !is_corridor_row(r)).collect();
        let mut homes = Vec::new();
        for c in 0..region_cols {
            for &r in &data_rows {
                homes.push(Pos::new(c + 1, REGION_TOP + r));
            }
        }
        Ok(Self { region_cols, region_rows, grid, homes, t_ports, y_ports })
    }

    pub fn capacity(&self) -> usize {
        self.homes.len()
    }

    /// Column-major placement of qubit `q`.
    pub fn home(&self, q: usize) -> Pos {
        self.homes[q]
    }

    /// Empty cells inside the logical region.
    pub fn buffer_cells(&self) -> usize {
        self.region_cols * self.region_rows - self.capacity()
    }

    pub fn t_ports(&self) -> &[Pos] {
        &self.t_ports
    }

    pub fn y_ports(&self) -> &[Pos] {
        &self.y_ports
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct LowerOptions {
    /// Allow remote CX through Bell pairs.
    pub phi: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Construction {
    Local,
    /// Routing combined with CX.
    C1,
    /// S by teleportation through |Y>.
    C2,
    /// T with a pre-interacted |T>|Y> pair.
    C3,
    /// Remote CX through |Phi>.
    C4,
    Measure,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateFragment {
    pub gate: usize,
    pub construction: Construction,
    /// Inbound routes, each starting with its source position.
    pub routes: Vec<Vec<Pos>>,
    pub t_used: u64,
    pub y_used: u64,
    /// Modes the logical qubit passes through while the gate acts on it.
    pub busy_modes: Vec<Mode>,
    pub ops: std::ops::Range<usize>,
}

impl GateFragment {
    pub fn busy_time(&self, dur: &DurationTable) -> f64 {
        self.busy_modes
            .iter()
            .map(|m| match m {
                Mode::CX => dur.tau_cx,
                Mode::H => dur.tau_h,
                Mode::MX => dur.tau_mx,
                Mode::MZ => dur.tau_mz,
                _ => 0.0,
            })
            .sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LoweredProgram {
    #[serde(skip)]
    pub grid: GridState,
    pub ops: Vec<ScheduledOp>,
    pub steps: Vec<Step>,
    pub fragments: Vec<GateFragment>,
    pub measurements: usize,
}

/// Incremental lowering state. Data cells start in |0> at their homes.
pub struct Lowerer {
    layout: Layout,
    grid: GridState,
    at: Vec<Option<Pos>>,
    ops: Vec<ScheduledOp>,
    steps: Vec<Step>,
    fragments: Vec<GateFragment>,
    slots: usize,
    opts: LowerOptions,
    line: usize,
}

impl Lowerer {
    pub fn new(layout: &Layout, width: usize, opts: LowerOptions) -> Result<Self, CompileError> {
        if width > layout.capacity() {
            return Err(CompileError::LayoutTooSmall { width, capacity: layout.capacity() });
        }
        let mut l = Self {
            layout: layout.clone(),
            grid: layout.grid.clone(),
            at: vec![None; width],
            ops: vec![],
            steps: vec![],
            fragments: vec![],
            slots: 0,
            opts,
            line: 0,
        };
        for q in 0..width {
            let p = layout.home(q);
            let c = l.prep(p, Mode::Prep0, ResourceState::Zero);
            l.steps.push(Step::Bind { qubit: q, cell: c });
            l.at[q] = Some(p);
        }
        Ok(l)
    }

    fn cell(&self, p: Pos) -> usize {
        self.grid.cell_at(p).expect("position holds a cell")
    }

    fn op(&mut self, op: Op) {
        self.ops.push(ScheduledOp { time: None, op, line: self.line });
    }

    fn prep(&mut self, p: Pos, mode: Mode, state: ResourceState) -> usize {
        let c = self.cell(p);
        self.grid.cells[c].mode = Mode::Idle;
        self.op(Op::Prep { at: p, mode });
        self.steps.push(Step::Prep { cell: c, state });
        c
    }

    fn walk(&mut self, from: Pos, path: &[Pos]) -> Pos {
        let mut cur = from;
        for &p in path {
            self.op(Op::Route { from: cur, to: p });
            let (a, b) = (self.cell(cur), self.cell(p));
            self.grid.swap_cells(a, b);
            cur = p;
        }
        cur
    }

    fn measure(&mut self, p: Pos, basis: Basis, logical: Option<usize>) -> usize {
        let c = self.cell(p);
        self.op(match basis {
            Basis::X => Op::Mx { at: p },
            Basis::Z => Op::Mz { at: p },
        });
        let slot = self.slots;
        self.slots += 1;
        self.steps.push(Step::Measure { cell: c, basis, slot, logical });
        self.grid.cells[c].mode = Mode::Empty;
        slot
    }

    fn cx(&mut self, a: Pos, b: Pos, logical: bool) {
        self.op(Op::Cx { a, b });
        let g = Gate::Cx(self.cell(a), self.cell(b));
        self.steps.push(Step::Gate { gate: g, logical });
    }

    fn pos_of(&self, gate: usize, q: usize) -> Result<Pos, CompileError> {
        self.at[q].ok_or(CompileError::MeasuredQubit { gate, qubit: q })
    }

    fn free_port(&self, ports: &[Pos], near: Pos) -> Result<Pos, CompileError> {
        ports
            .iter()
            .copied()
            .filter(|&p| !self.grid.is_blocked(p))
            .min_by_key(|p| (p.manhattan(near), p.col))
            .ok_or_else(|| CompileError::Infeasible("no free factory port".into()))
    }

    /// Free |T> port with a free |Y> port beside it, nearest to `near`.
    fn free_port_pair(&self, near: Pos) -> Result<(Pos, Pos), CompileError> {
        let mut best: Option<(Pos, Pos)> = None;
        for &t in &self.layout.t_ports {
            for &y in &self.layout.y_ports {
                if t.adjacent(y) && !self.grid.is_blocked(t) && !self.grid.is_blocked(y) {
                    let key = |p: (Pos, Pos)| (p.0.manhattan(near), p.0.col, p.1.col);
                    if best.is_none_or(|b| key((t, y)) < key(b)) {
                        best = Some((t, y));
                    }
                }
            }
        }
        best.ok_or_else(|| CompileError::Infeasible("no free |T>/|Y> port pair".into()))
    }

    /// One partner walks next to the other, the CX runs, and the walker
    /// returns home along the same path.
    fn long_range_cx(&mut self, pa: Pos, pb: Pos) -> Result<Vec<Vec<Pos>>, CompileError> {
        if pa.adjacent(pb) {
            self.cx(pa, pb, true);
            return Ok(vec![]);
        }
        // move the control next to the target, or the target next to the control
        let (mover, fixed, path) = match route_to_adjacent(&self.grid, pa, pb) {
            Ok(path) => (pa, pb, path),
            Err(_) => (pb, pa, route_to_adjacent(&self.grid, pb, pa)?),
        };
        let there = self.walk(mover, &path);
        if mover == pa {
            self.cx(there, fixed, true);
        } else {
            self.cx(fixed, there, true);
        }
        let back: Vec<Pos> = path.iter().rev().skip(1).copied().chain(std::iter::once(mover)).collect();
        self.walk(there, &back);
        let mut r = vec![mover];
        r.extend(path);
        Ok(vec![r])
    }

    pub fn lower_gate(&mut self, index: usize, gate: CircuitGate) -> Result<&GateFragment, CompileError> {
        self.line = index + 1;
        let start = self.ops.len();
        let mut frag = GateFragment {
            gate: index,
            construction: Construction::Local,
            routes: vec![],
            t_used: 0,
            y_used: 0,
            busy_modes: vec![],
            ops: 0..0,
        };
        match gate {
            CircuitGate::H(q) => {
                let p = self.pos_of(index, q)?;
                self.op(Op::H { at: p });
                self.steps.push(Step::Gate { gate: Gate::H(self.cell(p)), logical: true });
                frag.busy_modes = vec![Mode::H];
            }
            CircuitGate::Cx(a, b) | CircuitGate::RemoteCx(a, b) => {
                if matches!(gate, CircuitGate::RemoteCx(..)) && !self.opts.phi {
                    return Err(CompileError::Unsupported {
                        gate: gate.to_string(),
                        reason: "remote CX needs |Phi> support".into(),
                    });
                }
                let (pa, pb) = (self.pos_of(index, a)?, self.pos_of(index, b)?);
                frag.routes = self.long_range_cx(pa, pb)?;
                frag.construction = match gate {
                    CircuitGate::RemoteCx(..) => Construction::C4,
                    _ if frag.routes.is_empty() => Construction::Local,
                    _ => Construction::C1,
                };
                frag.busy_modes = vec![Mode::CX];
            }
            CircuitGate::S(q) => {
                let home = self.pos_of(index, q)?;
                let port = self.free_port(&self.layout.y_ports.clone(), home)?;
                let y = self.prep(port, Mode::PrepY, ResourceState::Y);
                let path = route_to_adjacent(&self.grid, port, home)?;
                let py = self.walk(port, &path);
                self.cx(py, home, false);
                let slot = self.measure(home, Basis::Z, None);
                self.steps.push(Step::Teleport {
                    qubit: q,
                    to: y,
                    conj_s: true,
                    corrections: vec![Correction { slot, x: true, z: true }],
                });
                let back = route(&self.grid, py, home)?;
                self.walk(py, &back);
                let mut r = vec![port];
                r.extend(path);
                frag.routes = vec![r];
                frag.construction = Construction::C2;
                frag.y_used = 1;
                frag.busy_modes = vec![Mode::CX];
            }
            CircuitGate::T(q) => {
                let home = self.pos_of(index, q)?;
                let (tport, yport) = self.free_port_pair(home)?;
                let t = self.prep(tport, Mode::PrepT, ResourceState::T);
                self.prep(yport, Mode::PrepY, ResourceState::Y);
                self.cx(tport, yport, false);
                let path = route_to_adjacent(&self.grid, tport, home)?;
                let pt = self.walk(tport, &path);
                self.cx(pt, home, false);
                let s1 = self.measure(home, Basis::Z, None);
                // delayed choice on the stationary |Y>; the basis depends on s1
                let s2 = self.measure(yport, Basis::X, None);
                self.steps.push(Step::Teleport {
                    qubit: q,
                    to: t,
                    conj_s: false,
                    corrections: vec![Correction { slot: s1, x: true, z: false }, Correction { slot: s2, x: false, z: true }],
                });
                let back = route(&self.grid, pt, home)?;
                self.walk(pt, &back);
                let mut r = vec![tport];
                r.extend(path);
                frag.routes = vec![r];
                frag.construction = Construction::C3;
                frag.t_used = 1;
                frag.y_used = 1;
                frag.busy_modes = vec![Mode::CX];
            }
            CircuitGate::Mx(q) | CircuitGate::Mz(q) => {
                let p = self.pos_of(index, q)?;
                let (basis, mode) = if matches!(gate, CircuitGate::Mx(_)) { (Basis::X, Mode::MX) } else { (Basis::Z, Mode::MZ) };
                self.measure(p, basis, Some(q));
                self.at[q] = None;
                frag.construction = Construction::Measure;
                frag.busy_modes = vec![mode];
            }
        }
        frag.ops = start..self.ops.len();
        self.fragments.push(frag);
        Ok(self.fragments.last().expect("just pushed"))
    }

    pub fn finish(self) -> LoweredProgram {
        LoweredProgram {
            grid: self.layout.grid,
            ops: self.ops,
            steps: self.steps,
            fragments: self.fragments,
            measurements: self.slots,
        }
    }
}

/// Lowers every gate, layer by layer.
pub fn lower(circ: &LogicalCircuit, layout: &Layout, opts: LowerOptions) -> Result<LoweredProgram, CompileError> {
    let mut l = Lowerer::new(layout, circ.width(), opts)?;
    for layer in circ.layers() {
        for i in layer {
            l.lower_gate(i, circ.gates()[i])?;
        }
    }
    Ok(l.finish())
}
