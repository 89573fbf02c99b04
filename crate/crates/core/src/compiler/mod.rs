//! Clifford+T circuits lowered to rule-checked grid schedules.
//!
//! Qubits are placed column-major on a logical region whose rows alternate
//! two data rows and one empty corridor row. Resource factories sit on a
//! row above the region, with their output ports on a corridor row between
//! the two. A corridor column on the left joins every corridor. Gates are
//! lowered one at a time and every moved cell returns home afterwards, so
//! the layout is the same at the start of every gate.

mod circuit;
mod frame;
mod lower;
mod route;
mod schedule;

use thiserror::Error;

use crate::game::Pos;

pub use circuit::{parse_circuit, CircuitGate, CircuitShape, LogicalCircuit, Workload};
pub use frame::{frame_equivalent, run_on_oracle, Correction, OracleRun, PauliFrame, ResourceState, Step};
pub use lower::{lower, Construction, GateFragment, Layout, LowerOptions, LoweredProgram, Lowerer};
pub use route::{path_edges, route, route_to_adjacent};
pub use schedule::{
    route_rounds, schedule, schedule_workload, CycleKind, CycleRecord, FactorySupply, LoweredSchedule, Supply,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CompileError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("line {line}: qubit {qubit} out of range for width {width}")]
    QubitOutOfRange { line: usize, qubit: usize, width: usize },
    #[error("unsupported gate {gate}: {reason}")]
    Unsupported { gate: String, reason: String },
    #[error("layout holds {capacity} qubits, circuit needs {width}")]
    LayoutTooSmall { width: usize, capacity: usize },
    #[error("invalid layout: {0}")]
    BadLayout(String),
    #[error("routing blocked from {from} to {to}")]
    RoutingBlocked { from: Pos, to: Pos },
    #[error("gate {gate} acts on measured qubit {qubit}")]
    MeasuredQubit { gate: usize, qubit: usize },
    #[error("non-Clifford step: {0}")]
    NonClifford(String),
    #[error("infeasible: {0}")]
    Infeasible(String),
}
