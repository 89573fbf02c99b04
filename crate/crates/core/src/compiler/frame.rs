//! Logical trace of a lowered program and its Pauli frame.
//!
//! Physical steps name game cells by id. Frame steps say which logical
//! qubit lives where and how measurement outcomes feed corrections.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{CircuitGate, CompileError, LogicalCircuit, LoweredProgram};
use crate::css_code::Basis;
use crate::stab_oracle::{Gate, Pauli, Tableau};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ResourceState {
    Zero,
    Plus,
    Y,
    T,
}

/// Pauli correction applied when measurement `slot` reads 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Correction {
    pub slot: usize,
    pub x: bool,
    pub z: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "step", rename_all = "snake_case")]
pub enum Step {
    Prep { cell: usize, state: ResourceState },
    /// A physical gate on cell ids. Logical gates also conjugate the frame;
    /// gates inside a teleport do not.
    Gate { gate: Gate, logical: bool },
    Measure { cell: usize, basis: Basis, slot: usize, logical: Option<usize> },
    /// Logical `qubit` now lives in `to`. The frame is conjugated by S when
    /// `conj_s` is set, then the corrections apply.
    Teleport { qubit: usize, to: usize, conj_s: bool, corrections: Vec<Correction> },
    Bind { qubit: usize, cell: usize },
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PauliFrame {
    pub x: Vec<bool>,
    pub z: Vec<bool>,
    cell_of: Vec<Option<usize>>,
    /// Frame-corrected outcomes of logical measurements.
    pub logical_outcomes: Vec<(usize, bool)>,
}

impl PauliFrame {
    /// Replays the frame steps given the raw outcome of each measurement
    /// slot.
    pub fn replay(width: usize, steps: &[Step], outcomes: &[bool]) -> Result<Self, CompileError> {
        let mut f = Self {
            x: vec![false; width],
            z: vec![false; width],
            cell_of: vec![None; width],
            logical_outcomes: vec![],
        };
        let out = |slot: usize| {
            outcomes
                .get(slot)
                .copied()
                .ok_or_else(|| CompileError::Infeasible(format!("no outcome for measurement {slot}")))
        };
        for s in steps {
            match s {
                Step::Prep { .. } => {}
                Step::Bind { qubit, cell } => f.cell_of[*qubit] = Some(*cell),
                Step::Gate { gate, logical: true } => match *gate {
                    Gate::H(c) => {
                        let q = f.qubit_at(c)?;
                        std::mem::swap(&mut f.x[q], &mut f.z[q]);
                    }
                    Gate::S(c) => {
                        let q = f.qubit_at(c)?;
                        f.z[q] ^= f.x[q];
                    }
                    Gate::Cx(a, b) => {
                        let (qa, qb) = (f.qubit_at(a)?, f.qubit_at(b)?);
                        f.x[qb] ^= f.x[qa];
                        f.z[qa] ^= f.z[qb];
                    }
                    g => return Err(CompileError::NonClifford(format!("frame gate {g:?}"))),
                },
                Step::Gate { .. } => {}
                Step::Measure { slot, basis, logical: Some(q), .. } => {
                    let flip = match basis {
                        Basis::Z => f.x[*q],
                        Basis::X => f.z[*q],
                    };
                    f.logical_outcomes.push((*q, out(*slot)? ^ flip));
                    f.cell_of[*q] = None;
                }
                Step::Measure { .. } => {}
                Step::Teleport { qubit, to, conj_s, corrections } => {
                    let q = *qubit;
                    if *conj_s {
                        f.z[q] ^= f.x[q];
                    }
                    for c in corrections {
                        if out(c.slot)? {
                            f.x[q] ^= c.x;
                            f.z[q] ^= c.z;
                        }
                    }
                    f.cell_of[q] = Some(*to);
                }
            }
        }
        Ok(f)
    }

    fn qubit_at(&self, cell: usize) -> Result<usize, CompileError> {
        self.cell_of
            .iter()
            .position(|&c| c == Some(cell))
            .ok_or_else(|| CompileError::Infeasible(format!("no logical qubit in cell {cell}")))
    }

    pub fn cell_of(&self, q: usize) -> Option<usize> {
        self.cell_of[q]
    }
}

/// Final state of a program replayed on the stabilizer oracle.
#[derive(Debug, Clone)]
pub struct OracleRun {
    pub tableau: Tableau,
    /// Game cell id to tableau qubit.
    pub index: BTreeMap<usize, usize>,
    pub outcomes: Vec<bool>,
}

/// Replays the physical steps. Random measurement outcomes are drawn from
/// `coin`; resource preparations stand in for factory outputs.
pub fn run_on_oracle(steps: &[Step], mut coin: impl FnMut() -> bool) -> Result<OracleRun, CompileError> {
    let mut index = BTreeMap::new();
    for s in steps {
        let cells: Vec<usize> = match s {
            Step::Prep { cell, .. } | Step::Measure { cell, .. } => vec![*cell],
            Step::Gate { gate, .. } => gate.qubits(),
            _ => vec![],
        };
        for c in cells {
            let n = index.len();
            index.entry(c).or_insert(n);
        }
    }
    let mut t = Tableau::new(index.len());
    let mut outcomes = Vec::new();
    let oracle = |e: crate::stab_oracle::OracleError| CompileError::Infeasible(e.to_string());
    for s in steps {
        match s {
            Step::Prep { cell, state } => {
                let a = index[cell];
                t.reset(a).map_err(oracle)?;
                match state {
                    ResourceState::Zero => {}
                    ResourceState::Plus => t.apply(Gate::H(a)).map_err(oracle)?,
                    ResourceState::Y => t.apply_all(&[Gate::H(a), Gate::S(a)]).map_err(oracle)?,
                    ResourceState::T => return Err(CompileError::NonClifford("|T> preparation".into())),
                }
            }
            Step::Gate { gate, .. } => {
                let g = match *gate {
                    Gate::H(c) => Gate::H(index[&c]),
                    Gate::S(c) => Gate::S(index[&c]),
                    Gate::Cx(a, b) => Gate::Cx(index[&a], index[&b]),
                    Gate::Cz(a, b) => Gate::Cz(index[&a], index[&b]),
                    Gate::X(c) => Gate::X(index[&c]),
                    Gate::Z(c) => Gate::Z(index[&c]),
                };
                t.apply(g).map_err(oracle)?;
            }
            Step::Measure { cell, basis, slot, .. } => {
                let (o, _) = t.measure(index[cell], *basis, coin()).map_err(oracle)?;
                if outcomes.len() <= *slot {
                    outcomes.resize(slot + 1, false);
                }
                outcomes[*slot] = o;
            }
            _ => {}
        }
    }
    Ok(OracleRun { tableau: t, index, outcomes })
}

/// Checks that a lowered Clifford circuit leaves its logical qubits in the
/// state produced by running the circuit directly, once the tracked Pauli
/// frame is undone.
pub fn frame_equivalent(
    circ: &LogicalCircuit,
    prog: &LoweredProgram,
    coin: impl FnMut() -> bool,
) -> Result<bool, CompileError> {
    let w = circ.width();
    let mut direct = Tableau::new(w);
    for g in circ.gates() {
        let gate = match *g {
            CircuitGate::H(q) => Gate::H(q),
            CircuitGate::S(q) => Gate::S(q),
            CircuitGate::Cx(a, b) => Gate::Cx(a, b),
            other => return Err(CompileError::NonClifford(format!("`{other}` in equivalence check"))),
        };
        direct.apply(gate).map_err(|e| CompileError::Infeasible(e.to_string()))?;
    }
    let mut run = run_on_oracle(&prog.steps, coin)?;
    let frame = PauliFrame::replay(w, &prog.steps, &run.outcomes)?;
    let n = run.tableau.qubits();
    let mut pos = Vec::with_capacity(w);
    for q in 0..w {
        let cell = frame
            .cell_of(q)
            .ok_or_else(|| CompileError::Infeasible(format!("qubit {q} not bound")))?;
        pos.push(run.index[&cell]);
    }
    let mut undo = Pauli::identity(n);
    for q in 0..w {
        undo.x[pos[q]] = frame.x[q];
        undo.z[pos[q]] = frame.z[q];
    }
    run.tableau.apply_pauli(&undo).map_err(|e| CompileError::Infeasible(e.to_string()))?;
    for g in direct.stabilizers() {
        let mut p = Pauli::identity(n);
        p.neg = g.neg;
        for q in 0..w {
            p.x[pos[q]] = g.x[q];
            p.z[pos[q]] = g.z[q];
        }
        if run.tableau.expectation(&p) != Some(false) {
            return Ok(false);
        }
    }
    Ok(true)
}
