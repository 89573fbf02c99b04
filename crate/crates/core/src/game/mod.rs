//! Cells, modes and the transition rules R1-R6 with the error-budget ledger
//! E1-E3.
//!
//! A [`GridState`] is a rectangle of slots. Each slot holds either a cell
//! (whose mode may be `Empty`) or part of a factory. Cells keep their id when
//! they move; R5 swaps exchange the positions of an idle cell and an empty
//! one.

mod engine;
mod random;
pub mod schedule_file;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use engine::{run_schedule, straight_path, validate_timeline, Event, EventKind, Op, ScheduledOp, Timeline};
pub use random::random_legal_schedule;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Mode {
    Empty,
    Idle,
    SE,
    CX,
    H,
    MX,
    MZ,
    Prep0,
    PrepPlus,
    PrepT,
    PrepY,
    PrepPhi,
}

impl Mode {
    pub fn is_prep(self) -> bool {
        matches!(
            self,
            Mode::Prep0 | Mode::PrepPlus | Mode::PrepT | Mode::PrepY | Mode::PrepPhi
        )
    }

    pub fn is_measure(self) -> bool {
        matches!(self, Mode::MX | Mode::MZ)
    }

    /// Factory kind a preparation mode draws from, if any.
    pub fn factory_kind(self) -> Option<FactoryKind> {
        match self {
            Mode::PrepT => Some(FactoryKind::T),
            Mode::PrepY => Some(FactoryKind::Y),
            Mode::PrepPhi => Some(FactoryKind::Phi),
            _ => None,
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FactoryKind {
    T,
    Y,
    Phi,
}

impl FromStr for FactoryKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "T" | "t" => Ok(Self::T),
            "Y" | "y" => Ok(Self::Y),
            "Phi" | "phi" | "PHI" => Ok(Self::Phi),
            _ => Err(format!("unknown factory kind `{s}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Rule {
    R1,
    R2,
    R3,
    R4,
    R5,
    R6,
    E1,
    E2,
    E3,
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, PartialEq, Error, Serialize, Deserialize)]
#[error("{}{rule}: {message}", line.map(|l| format!("line {l}: ")).unwrap_or_default())]
pub struct Violation {
    pub rule: Rule,
    pub line: Option<usize>,
    pub message: String,
}

impl Violation {
    pub fn new(rule: Rule, message: impl Into<String>) -> Self {
        Self {
            rule,
            line: None,
            message: message.into(),
        }
    }

    pub fn at(mut self, line: usize) -> Self {
        self.line.get_or_insert(line);
        self
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum GameError {
    #[error(transparent)]
    Violation(#[from] Violation),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("invalid game config: {0}")]
    Config(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Pos {
    pub col: usize,
    pub row: usize,
}

impl Pos {
    pub const fn new(col: usize, row: usize) -> Self {
        Self { col, row }
    }

    pub fn manhattan(self, o: Pos) -> usize {
        self.col.abs_diff(o.col) + self.row.abs_diff(o.row)
    }

    pub fn adjacent(self, o: Pos) -> bool {
        self.manhattan(o) == 1
    }
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{}", self.col, self.row)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub id: usize,
    pub pos: Pos,
    pub mode: Mode,
    pub acc_error: f64,
    pub mode_entry_time: f64,
    pub pending_gate_progress: f64,
    /// Factory-internal cells may skip the CX return leg.
    pub in_factory: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Slot {
    Cell(usize),
    Factory(FactoryKind),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridState {
    pub cols: usize,
    pub rows: usize,
    slots: Vec<Slot>,
    pub cells: Vec<Cell>,
}

impl GridState {
    /// A grid where every slot holds an empty cell; cell ids are row-major.
    pub fn new(cols: usize, rows: usize) -> Self {
        let mut cells = Vec::with_capacity(cols * rows);
        for row in 0..rows {
            for col in 0..cols {
                cells.push(Cell {
                    id: cells.len(),
                    pos: Pos::new(col, row),
                    mode: Mode::Empty,
                    acc_error: 0.0,
                    mode_entry_time: 0.0,
                    pending_gate_progress: 0.0,
                    in_factory: false,
                });
            }
        }
        Self {
            cols,
            rows,
            slots: (0..cols * rows).map(Slot::Cell).collect(),
            cells,
        }
    }

    pub fn contains(&self, p: Pos) -> bool {
        p.col < self.cols && p.row < self.rows
    }

    pub fn slot(&self, p: Pos) -> Option<Slot> {
        self.contains(p).then(|| self.slots[p.row * self.cols + p.col])
    }

    pub fn cell_at(&self, p: Pos) -> Option<usize> {
        match self.slot(p)? {
            Slot::Cell(id) => Some(id),
            Slot::Factory(_) => None,
        }
    }

    /// Turns the slot at `p` into a factory block. The cell that lived there
    /// keeps its id but is parked off-grid in mode `Empty`.
    pub fn add_factory(&mut self, p: Pos, kind: FactoryKind) -> Result<(), GameError> {
        if !self.contains(p) {
            return Err(GameError::Config(format!("factory at {p} outside grid")));
        }
        self.slots[p.row * self.cols + p.col] = Slot::Factory(kind);
        Ok(())
    }

    pub fn mark_factory_cell(&mut self, p: Pos) -> Result<(), GameError> {
        let id = self
            .cell_at(p)
            .ok_or_else(|| GameError::Config(format!("no cell at {p}")))?;
        self.cells[id].in_factory = true;
        Ok(())
    }

    pub fn neighbors(&self, p: Pos) -> Vec<Pos> {
        let mut out = Vec::with_capacity(4);
        if p.col > 0 {
            out.push(Pos::new(p.col - 1, p.row));
        }
        if p.row > 0 {
            out.push(Pos::new(p.col, p.row - 1));
        }
        if p.col + 1 < self.cols {
            out.push(Pos::new(p.col + 1, p.row));
        }
        if p.row + 1 < self.rows {
            out.push(Pos::new(p.col, p.row + 1));
        }
        out
    }

    pub fn adjacent_factory(&self, p: Pos, kind: FactoryKind) -> bool {
        self.neighbors(p)
            .into_iter()
            .any(|q| self.slot(q) == Some(Slot::Factory(kind)))
    }

    /// Exchanges the positions of two cells.
    pub fn swap_cells(&mut self, a: usize, b: usize) {
        let (pa, pb) = (self.cells[a].pos, self.cells[b].pos);
        self.cells[a].pos = pb;
        self.cells[b].pos = pa;
        self.slots[pb.row * self.cols + pb.col] = Slot::Cell(a);
        self.slots[pa.row * self.cols + pa.col] = Slot::Cell(b);
    }

    /// Slots occupied by a non-empty cell or a factory.
    pub fn is_blocked(&self, p: Pos) -> bool {
        match self.slot(p) {
            None => true,
            Some(Slot::Factory(_)) => true,
            Some(Slot::Cell(id)) => self.cells[id].mode != Mode::Empty,
        }
    }
}

/// A requested change to one cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Action {
    Enter(Mode),
    /// Enter CX together with `partner`.
    EnterCx { partner: usize },
    /// R5 exchange with the empty cell `with`.
    Swap { with: usize },
}

/// Mode-graph check without spatial context. `resume` is the gate mode an SE
/// interrupted, if any.
pub fn check_mode_transition(from: Mode, to: Mode, resume: Option<Mode>) -> Result<Rule, Violation> {
    use Mode::*;
    let no = |rule: Rule| Err(Violation::new(rule, format!("{from} -> {to} is not allowed")));
    if from == Empty {
        return if to.is_prep() { Ok(Rule::R1) } else { no(Rule::R1) };
    }
    if from.is_prep() {
        return if to == Idle { Ok(Rule::R1) } else { no(Rule::R1) };
    }
    match (from, to) {
        (Empty | Prep0 | PrepPlus | PrepT | PrepY | PrepPhi, _) => unreachable!(),
        (Idle, SE) => Ok(Rule::R2),
        (Idle, H) => Ok(Rule::R3),
        (Idle, CX) => Ok(Rule::R4),
        (Idle, MX | MZ) => Ok(Rule::R6),
        (Idle, Idle) => Ok(Rule::R5),
        (Idle, t) if t.is_prep() => no(Rule::R1),
        (Idle, _) => no(Rule::R6),
        (SE, Idle) => Ok(Rule::R2),
        (SE, H) if resume == Some(H) => Ok(Rule::R3),
        (SE, CX) if resume == Some(CX) => Ok(Rule::R4),
        (SE, H) => no(Rule::R3),
        (SE, CX) => no(Rule::R4),
        (SE, _) => no(Rule::R2),
        (H, Idle | SE) => Ok(Rule::R3),
        (H, _) => no(Rule::R3),
        (CX, Idle | SE) => Ok(Rule::R4),
        (CX, _) => no(Rule::R4),
        (MX | MZ, Empty) => Ok(Rule::R6),
        (MX | MZ, _) => no(Rule::R6),
    }
}

/// Checks one action against the full rule set, including adjacency.
/// `resume` carries the interrupted gate when leaving SE.
pub fn validate_transition(
    grid: &GridState,
    cell: usize,
    action: Action,
    resume: Option<Mode>,
) -> Result<Rule, Violation> {
    let c = grid
        .cells
        .get(cell)
        .ok_or_else(|| Violation::new(Rule::R1, format!("no cell {cell}")))?;
    match action {
        Action::Enter(Mode::CX) => Err(Violation::new(Rule::R4, "CX needs a partner")),
        Action::Enter(to) => {
            let rule = check_mode_transition(c.mode, to, resume)?;
            if let Some(kind) = to.factory_kind() {
                if !c.in_factory && !grid.adjacent_factory(c.pos, kind) {
                    return Err(Violation::new(
                        Rule::R1,
                        format!("{to} at {} needs an adjacent {kind:?} factory", c.pos),
                    ));
                }
            }
            Ok(rule)
        }
        Action::EnterCx { partner } => {
            let p = grid
                .cells
                .get(partner)
                .ok_or_else(|| Violation::new(Rule::R4, format!("no cell {partner}")))?;
            if partner == cell {
                return Err(Violation::new(Rule::R4, "CX partner is the cell itself"));
            }
            check_mode_transition(c.mode, Mode::CX, resume)?;
            check_mode_transition(p.mode, Mode::CX, resume)?;
            if !c.pos.adjacent(p.pos) {
                return Err(Violation::new(
                    Rule::R4,
                    format!("CX between non-adjacent cells {} and {}", c.pos, p.pos),
                ));
            }
            Ok(Rule::R4)
        }
        Action::Swap { with } => {
            let e = grid
                .cells
                .get(with)
                .ok_or_else(|| Violation::new(Rule::R5, format!("no cell {with}")))?;
            if c.mode != Mode::Idle {
                return Err(Violation::new(Rule::R5, format!("only idle cells move, cell is {}", c.mode)));
            }
            if e.mode != Mode::Empty {
                return Err(Violation::new(Rule::R5, format!("swap target at {} is not empty", e.pos)));
            }
            if !c.pos.adjacent(e.pos) {
                return Err(Violation::new(Rule::R5, "swap partner is not adjacent"));
            }
            Ok(Rule::R5)
        }
    }
}

/// Error growth rates `r_m` (per second) of the linear model `p_m(t) = r_m t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rates {
    pub idle: f64,
    pub h: f64,
    pub cx: f64,
}

impl Rates {
    pub fn of(&self, mode: Mode) -> f64 {
        match mode {
            Mode::Idle => self.idle,
            Mode::H => self.h,
            Mode::CX => self.cx,
            _ => 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrepErrors {
    pub zero: f64,
    pub plus: f64,
    pub t: f64,
    pub y: f64,
    pub phi: f64,
}

impl PrepErrors {
    pub fn uniform(p: f64) -> Self {
        Self {
            zero: p,
            plus: p,
            t: p,
            y: p,
            phi: p,
        }
    }

    pub fn of(&self, mode: Mode) -> f64 {
        match mode {
            Mode::Prep0 => self.zero,
            Mode::PrepPlus => self.plus,
            Mode::PrepT => self.t,
            Mode::PrepY => self.y,
            Mode::PrepPhi => self.phi,
            _ => 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameConfig {
    pub p_budget: f64,
    pub prep_errors: PrepErrors,
    pub rates: Rates,
    /// SE rounds per reset: 1 under algorithmic fault tolerance, `d` otherwise.
    pub se_rounds: usize,
    /// Number of equal sections a Hadamard may be split into.
    pub h_segments: usize,
}

impl Default for GameConfig {
    fn default() -> Self {
        Self {
            p_budget: 0.01,
            prep_errors: PrepErrors::uniform(1e-3),
            rates: Rates {
                idle: 10.0,
                h: 10.0,
                cx: 10.0,
            },
            se_rounds: 1,
            h_segments: 2,
        }
    }
}

impl GameConfig {
    pub fn validate(&self) -> Result<(), GameError> {
        if !(self.p_budget > 0.0) {
            return Err(GameError::Config("p_budget must be positive".into()));
        }
        let pe = &self.prep_errors;
        if [pe.zero, pe.plus, pe.t, pe.y, pe.phi]
            .iter()
            .any(|&p| !(0.0..self.p_budget).contains(&p))
        {
            return Err(GameError::Config("every preparation error must lie in [0, p_budget)".into()));
        }
        let r = &self.rates;
        if [r.idle, r.h, r.cx].iter().any(|&x| x < 0.0 || !x.is_finite()) {
            return Err(GameError::Config("rates must be finite and non-negative".into()));
        }
        if self.se_rounds == 0 || self.h_segments == 0 {
            return Err(GameError::Config("se_rounds and h_segments must be >= 1".into()));
        }
        Ok(())
    }
}

/// E2 accrual over `dt` seconds. A CX cell also takes its partner's
/// increment, so a symmetric pair each gains `(r_a + r_b) dt`.
pub fn accrue(cell: &Cell, dt: f64, rates: &Rates, partner: Option<&Cell>) -> Cell {
    let mut out = cell.clone();
    let mut inc = rates.of(cell.mode) * dt;
    if let (Mode::CX, Some(p)) = (cell.mode, partner) {
        inc += rates.of(p.mode) * dt;
    }
    out.acc_error += inc;
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid_with(modes: &[(Pos, Mode)]) -> GridState {
        let mut g = GridState::new(5, 5);
        for &(p, m) in modes {
            let id = g.cell_at(p).unwrap();
            g.cells[id].mode = m;
        }
        g
    }

    #[test]
    fn empty_to_idle_breaks_r1() {
        let g = GridState::new(2, 2);
        let v = validate_transition(&g, 0, Action::Enter(Mode::Idle), None).unwrap_err();
        assert_eq!(v.rule, Rule::R1);
        assert_eq!(validate_transition(&g, 0, Action::Enter(Mode::Prep0), None), Ok(Rule::R1));
    }

    #[test]
    fn measurement_must_end_empty() {
        let g = grid_with(&[(Pos::new(0, 0), Mode::MX)]);
        let v = validate_transition(&g, 0, Action::Enter(Mode::Idle), None).unwrap_err();
        assert_eq!(v.rule, Rule::R6);
        assert_eq!(validate_transition(&g, 0, Action::Enter(Mode::Empty), None), Ok(Rule::R6));
    }

    #[test]
    fn swap_with_adjacent_empty() {
        let g = grid_with(&[(Pos::new(1, 1), Mode::Idle)]);
        let a = g.cell_at(Pos::new(1, 1)).unwrap();
        let e = g.cell_at(Pos::new(2, 1)).unwrap();
        assert_eq!(validate_transition(&g, a, Action::Swap { with: e }, None), Ok(Rule::R5));
        let far = g.cell_at(Pos::new(3, 1)).unwrap();
        assert_eq!(
            validate_transition(&g, a, Action::Swap { with: far }, None).unwrap_err().rule,
            Rule::R5
        );
    }

    #[test]
    fn cx_needs_adjacency() {
        let g = grid_with(&[(Pos::new(0, 0), Mode::Idle), (Pos::new(2, 0), Mode::Idle), (Pos::new(1, 0), Mode::Idle)]);
        let (a, b, c) = (0, 2, 1);
        assert_eq!(
            validate_transition(&g, a, Action::EnterCx { partner: b }, None).unwrap_err().rule,
            Rule::R4
        );
        assert_eq!(validate_transition(&g, a, Action::EnterCx { partner: c }, None), Ok(Rule::R4));
    }

    #[test]
    fn resource_prep_needs_factory() {
        let mut g = GridState::new(3, 3);
        assert_eq!(
            validate_transition(&g, 4, Action::Enter(Mode::PrepT), None).unwrap_err().rule,
            Rule::R1
        );
        g.add_factory(Pos::new(1, 0), FactoryKind::T).unwrap();
        assert_eq!(validate_transition(&g, 4, Action::Enter(Mode::PrepT), None), Ok(Rule::R1));
        assert!(validate_transition(&g, 4, Action::Enter(Mode::PrepY), None).is_err());
    }

    #[test]
    fn se_resumes_only_the_interrupted_gate() {
        assert_eq!(check_mode_transition(Mode::SE, Mode::H, Some(Mode::H)), Ok(Rule::R3));
        assert_eq!(check_mode_transition(Mode::SE, Mode::H, None).unwrap_err().rule, Rule::R3);
        assert_eq!(check_mode_transition(Mode::SE, Mode::CX, Some(Mode::H)).unwrap_err().rule, Rule::R4);
        assert_eq!(check_mode_transition(Mode::H, Mode::CX, None).unwrap_err().rule, Rule::R3);
    }

    #[test]
    fn accrual_rules() {
        let rates = Rates {
            idle: 1e-5 / 1e-3,
            h: 1.0,
            cx: 3.0,
        };
        let g = GridState::new(2, 1);
        let mut c = g.cells[0].clone();
        c.mode = Mode::Idle;
        assert_eq!(accrue(&c, 0.0, &rates, None).acc_error, 0.0);
        assert!((accrue(&c, 1e-3, &rates, None).acc_error - 1e-5).abs() < 1e-18);
        c.mode = Mode::CX;
        let mut p = g.cells[1].clone();
        p.mode = Mode::CX;
        let a = accrue(&c, 0.5, &rates, Some(&p));
        let b = accrue(&p, 0.5, &rates, Some(&c));
        assert_eq!(a.acc_error, 2.0 * 3.0 * 0.5);
        assert_eq!(a.acc_error, b.acc_error);
    }

    #[test]
    fn config_validation() {
        assert!(GameConfig::default().validate().is_ok());
        let mut c = GameConfig::default();
        c.prep_errors.t = 0.02;
        assert!(c.validate().is_err());
    }
}
