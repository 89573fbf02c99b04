//! End-to-end space and time estimates.
//!
//! Space counts atoms: a cell is `2d^2 - 1` atoms, a |T> factory is its
//! cell count times that, a |Y> factory two cells, and the grid one cell per
//! logical qubit (routing buffer cells hold no atoms). Time is
//! `effective_depth * tau_cycle`, where the effective depth is the larger of
//! the circuit depth and the T count over the |T> throughput.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::compiler::{CircuitShape, Layout};
use crate::css_code::{builtin, BuiltinCode};
use crate::factory_sim::{self, aggregate_throughput, FactoryConfig, FactoryError};
use crate::timing::{self, TimingConfig, TimingError, TimingSource};

#[derive(Debug, Error)]
pub enum EstimateError {
    #[error("invalid config: {0}")]
    Config(String),
    #[error(transparent)]
    Timing(#[from] TimingError),
    #[error(transparent)]
    Factory(#[from] FactoryError),
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error("unknown report format `{0}`")]
    Format(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridDims {
    pub cols: usize,
    pub rows: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct Factories {
    pub t: usize,
    pub y: usize,
    /// Measurement-area cells per |T> factory.
    pub n_mb: usize,
    pub reorder: bool,
}

impl Default for Factories {
    fn default() -> Self {
        Self { t: 25, y: 50, n_mb: 4, reorder: true }
    }
}

/// Fixed inputs of the zoned comparison that are stated rather than
/// modelled. The modelled counterparts are reported next to them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ZonedParams {
    pub tau_cycle: f64,
    pub t_throughput: f64,
    /// Stated effective depth; computed from the T count when absent.
    pub stated_depth: Option<u64>,
    /// Syndrome qubits per data-qubit check, relative to one.
    pub syndrome_factor: u64,
}

impl Default for ZonedParams {
    fn default() -> Self {
        Self { tau_cycle: 900e-6, t_throughput: 1.5, stated_depth: None, syndrome_factor: 3 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ArchitectureConfig {
    pub d: usize,
    pub grid: GridDims,
    pub factories: Factories,
    pub timing: TimingSource,
    pub workload: CircuitShape,
    pub zoned: bool,
    /// Cap T gates per layer at the floored throughput.
    pub floor_throughput: bool,
    /// A total quoted elsewhere, compared against the component sum.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub declared_total: Option<u64>,
    pub zoned_params: ZonedParams,
    pub physics: TimingConfig,
}

impl Default for ArchitectureConfig {
    fn default() -> Self {
        Self::table1()
    }
}

impl ArchitectureConfig {
    pub fn table1() -> Self {
        Self {
            d: 9,
            grid: GridDims { cols: 25, rows: 5 },
            factories: Factories::default(),
            timing: TimingSource::Pinned,
            workload: CircuitShape { width: 100, depth: 20_000_000, t_count: 100_000_000 },
            zoned: false,
            floor_throughput: true,
            declared_total: Some(76_475),
            zoned_params: ZonedParams::default(),
            physics: TimingConfig::default(),
        }
    }

    pub fn zoned_baseline() -> Self {
        Self {
            factories: Factories { t: 8, y: 25, ..Factories::default() },
            zoned: true,
            floor_throughput: false,
            declared_total: None,
            zoned_params: ZonedParams { stated_depth: Some(66_000_000), ..ZonedParams::default() },
            ..Self::table1()
        }
    }

    pub fn from_toml(text: &str) -> Result<Self, EstimateError> {
        toml::from_str(text).map_err(|e| EstimateError::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), EstimateError> {
        if self.d < 3 || self.d % 2 == 0 {
            return Err(EstimateError::Config(format!("distance must be odd and at least 3, got {}", self.d)));
        }
        if self.factories.n_mb == 0 {
            return Err(EstimateError::Config("n_mb must be positive".into()));
        }
        let layout = Layout::new(self.grid.cols, self.grid.rows).map_err(|e| EstimateError::Config(e.to_string()))?;
        if self.workload.width > layout.capacity() {
            return Err(EstimateError::Config(format!(
                "{} qubits do not fit a {}x{} grid (capacity {})",
                self.workload.width,
                self.grid.cols,
                self.grid.rows,
                layout.capacity()
            )));
        }
        let z = &self.zoned_params;
        if self.zoned && !(z.tau_cycle > 0.0 && z.t_throughput >= 0.0) {
            return Err(EstimateError::Config("zoned cycle must be positive".into()));
        }
        self.physics.validate()?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Preset {
    Table1,
    ZonedBaseline,
}

impl Preset {
    pub fn config(self) -> ArchitectureConfig {
        match self {
            Preset::Table1 => ArchitectureConfig::table1(),
            Preset::ZonedBaseline => ArchitectureConfig::zoned_baseline(),
        }
    }
}

impl FromStr for Preset {
    type Err = EstimateError;
    fn from_str(s: &str) -> Result<Self, EstimateError> {
        match s {
            "table1" => Ok(Preset::Table1),
            "zoned-baseline" | "zoned_baseline" | "zoned" => Ok(Preset::ZonedBaseline),
            _ => Err(EstimateError::Config(format!("unknown preset `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResourceReport {
    pub label: String,
    pub d: usize,
    pub atoms_per_cell: u64,
    pub t_factory_cells: u64,
    pub atoms_t_factory: u64,
    pub n_t_factories: u64,
    pub atoms_t_factories: u64,
    pub y_factory_cells: u64,
    pub atoms_y_factory: u64,
    pub n_y_factories: u64,
    pub atoms_y_factories: u64,
    pub logical_qubits: u64,
    pub atoms_grid: u64,
    pub computed_total: u64,
    pub declared_total: Option<u64>,
    pub declared_total_flag: Option<String>,
    pub tau_r: f64,
    pub tau_ops: f64,
    pub tau_se: f64,
    pub tau_cycle: f64,
    pub tau_factory: f64,
    pub tau_y_factory: f64,
    /// Unfloored |T> states per cycle.
    pub throughput: f64,
    /// Rate used to cap T gates per layer.
    pub throughput_used: f64,
    pub depth: u64,
    pub t_count: u64,
    pub effective_depth: u64,
    pub effective_depth_computed: u64,
    pub runtime_seconds: f64,
    pub notes: Vec<String>,
}

impl ResourceReport {
    pub fn runtime_hours(&self) -> f64 {
        self.runtime_seconds / 3600.0
    }
}

fn effective_depth(depth: u64, t_count: u64, thr: f64) -> Result<u64, EstimateError> {
    if t_count == 0 {
        return Ok(depth);
    }
    if !(thr > 0.0) {
        return Err(EstimateError::Infeasible(format!("{t_count} T gates with zero |T> throughput")));
    }
    let need = (t_count as f64 / thr).ceil();
    Ok(depth.max(need as u64))
}

fn total_flag(total: u64, declared: Option<u64>) -> Option<String> {
    declared
        .filter(|&d| d != total)
        .map(|d| format!("declared total {d} differs from the component sum {total} by {}", total.abs_diff(d)))
}

/// Space and time estimate for the grid architecture.
pub fn estimate(cfg: &ArchitectureConfig) -> Result<ResourceReport, EstimateError> {
    cfg.validate()?;
    if cfg.zoned {
        return zoned_baseline(cfg);
    }
    let d = cfg.d as u64;
    let dur = timing::durations(cfg.timing, cfg.d, &cfg.physics)?;
    let rm15 = builtin(BuiltinCode::ReedMuller15).expect("builtin code");
    let fcfg = FactoryConfig { n_mb: cfg.factories.n_mb, reorder: cfg.factories.reorder, ..FactoryConfig::table1(rm15, &dur) };
    let tf = factory_sim::simulate_t_factory(&fcfg, &dur)?;
    let yf = factory_sim::simulate_y_factory(&dur)?;
    let tau_cycle = dur.tau_cycle();
    let throughput = aggregate_throughput(cfg.factories.t, &tf, tau_cycle);
    let used = if cfg.floor_throughput { throughput.floor() } else { throughput };
    let w = cfg.workload;
    let eff = effective_depth(w.depth, w.t_count, used)?;

    let n_cell = 2 * d * d - 1;
    let t_cells = tf.space_cells as u64;
    let y_cells = yf.space_cells as u64;
    let (nt, ny) = (cfg.factories.t as u64, cfg.factories.y as u64);
    let atoms_t = nt * t_cells * n_cell;
    let atoms_y = ny * y_cells * n_cell;
    let atoms_grid = w.width as u64 * n_cell;
    let total = atoms_t + atoms_y + atoms_grid;
    let mut notes = vec![];
    let flag = total_flag(total, cfg.declared_total);
    if let Some(f) = &flag {
        notes.push(f.clone());
    }
    Ok(ResourceReport {
        label: "grid".into(),
        d: cfg.d,
        atoms_per_cell: n_cell,
        t_factory_cells: t_cells,
        atoms_t_factory: t_cells * n_cell,
        n_t_factories: nt,
        atoms_t_factories: atoms_t,
        y_factory_cells: y_cells,
        atoms_y_factory: y_cells * n_cell,
        n_y_factories: ny,
        atoms_y_factories: atoms_y,
        logical_qubits: w.width as u64,
        atoms_grid,
        computed_total: total,
        declared_total: cfg.declared_total,
        declared_total_flag: flag,
        tau_r: dur.tau_r,
        tau_ops: dur.tau_ops(),
        tau_se: dur.tau_se,
        tau_cycle,
        tau_factory: tf.tau_factory,
        tau_y_factory: yf.tau_factory,
        throughput,
        throughput_used: used,
        depth: w.depth,
        t_count: w.t_count,
        effective_depth: eff,
        effective_depth_computed: eff,
        runtime_seconds: eff as f64 * tau_cycle,
        notes,
    })
}

/// Zoned comparison: pipelined syndrome qubits multiply the ancilla count,
/// SE is shuttling-limited without measurement time, and fewer factories
/// fit in a similar atom budget.
pub fn zoned_baseline(cfg: &ArchitectureConfig) -> Result<ResourceReport, EstimateError> {
    cfg.validate()?;
    if !cfg.zoned {
        return Err(EstimateError::Config("zoned_baseline needs zoned = true".into()));
    }
    let z = cfg.zoned_params;
    let d = cfg.d as u64;
    let dur = timing::durations(cfg.timing, cfg.d, &cfg.physics)?;
    let se_zone = timing::shuttled_se_time(cfg.d, &cfg.physics)?;
    let model_cycle = dur.tau_r + dur.tau_ops() + 2.0 * se_zone;
    let rm15 = builtin(BuiltinCode::ReedMuller15).expect("builtin code");
    let fcfg = FactoryConfig {
        n_mb: cfg.factories.n_mb,
        reorder: cfg.factories.reorder,
        se_override: Some(se_zone),
        ..FactoryConfig::table1(rm15, &dur)
    };
    let tf = factory_sim::simulate_t_factory(&fcfg, &dur)?;
    let yf = factory_sim::simulate_y_factory(&dur)?;
    let model_thr = aggregate_throughput(cfg.factories.t, &tf, z.tau_cycle);
    let used = if cfg.floor_throughput { z.t_throughput.floor() } else { z.t_throughput };
    let w = cfg.workload;
    let computed = effective_depth(w.depth, w.t_count, used)?;
    let eff = z.stated_depth.unwrap_or(computed);

    let n_cell = d * d + z.syndrome_factor * (d * d - 1);
    let t_cells = tf.space_cells as u64;
    let y_cells = yf.space_cells as u64;
    let (nt, ny) = (cfg.factories.t as u64, cfg.factories.y as u64);
    let atoms_t = nt * t_cells * n_cell;
    let atoms_y = ny * y_cells * n_cell;
    let atoms_grid = w.width as u64 * n_cell;
    let total = atoms_t + atoms_y + atoms_grid;
    let mut notes = vec![
        format!(
            "cycle {:.0} us is fixed; shuttled SE of {:.1} us gives {:.0} us",
            z.tau_cycle * 1e6,
            se_zone * 1e6,
            model_cycle * 1e6
        ),
        format!(
            "throughput {} per cycle is fixed; the factory model gives {:.3} (tau_factory {:.0} us)",
            z.t_throughput,
            model_thr,
            tf.tau_factory * 1e6
        ),
        format!("syndrome qubits counted at exactly {}x, a lower bound", z.syndrome_factor),
    ];
    if eff != computed {
        notes.push(format!(
            "stated depth {eff} used; the T count over the throughput gives {computed} ({:.0} s)",
            computed as f64 * z.tau_cycle
        ));
    }
    let flag = total_flag(total, cfg.declared_total);
    if let Some(f) = &flag {
        notes.push(f.clone());
    }
    Ok(ResourceReport {
        label: "zoned".into(),
        d: cfg.d,
        atoms_per_cell: n_cell,
        t_factory_cells: t_cells,
        atoms_t_factory: t_cells * n_cell,
        n_t_factories: nt,
        atoms_t_factories: atoms_t,
        y_factory_cells: y_cells,
        atoms_y_factory: y_cells * n_cell,
        n_y_factories: ny,
        atoms_y_factories: atoms_y,
        logical_qubits: w.width as u64,
        atoms_grid,
        computed_total: total,
        declared_total: cfg.declared_total,
        declared_total_flag: flag,
        tau_r: dur.tau_r,
        tau_ops: dur.tau_ops(),
        tau_se: se_zone,
        tau_cycle: z.tau_cycle,
        tau_factory: tf.tau_factory,
        tau_y_factory: yf.tau_factory,
        throughput: z.t_throughput,
        throughput_used: used,
        depth: w.depth,
        t_count: w.t_count,
        effective_depth: eff,
        effective_depth_computed: computed,
        runtime_seconds: eff as f64 * z.tau_cycle,
        notes,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Table,
    Csv,
    Json,
}

impl FromStr for ReportFormat {
    type Err = EstimateError;
    fn from_str(s: &str) -> Result<Self, EstimateError> {
        match s {
            "table" => Ok(Self::Table),
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            _ => Err(EstimateError::Format(s.into())),
        }
    }
}

impl fmt::Display for ReportFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Table => "table",
            Self::Csv => "csv",
            Self::Json => "json",
        })
    }
}

/// `(quantity, value, unit, source)` rows in report order.
pub fn report_rows(r: &ResourceReport) -> Vec<[String; 4]> {
    let int = |v: u64| v.to_string();
    let us = |v: f64| format!("{:.1}", v * 1e6);
    let row = |q: &str, v: String, u: &str, s: &str| [q.to_string(), v, u.to_string(), s.to_string()];
    let mut rows = vec![
        row("distance", int(r.d as u64), "", "config"),
        row("single cell", int(r.atoms_per_cell), "atoms", "computed"),
        row("T factory size", int(r.t_factory_cells), "cells", "computed"),
        row("single T factory", int(r.atoms_t_factory), "atoms", "computed"),
        row("T factories", int(r.n_t_factories), "count", "config"),
        row("T factories total", int(r.atoms_t_factories), "atoms", "computed"),
        row("single Y factory", int(r.atoms_y_factory), "atoms", "computed"),
        row("Y factories", int(r.n_y_factories), "count", "config"),
        row("Y factories total", int(r.atoms_y_factories), "atoms", "computed"),
        row("logical qubits", int(r.logical_qubits), "count", "config"),
        row("grid", int(r.atoms_grid), "atoms", "computed"),
        row("total", int(r.computed_total), "atoms", "computed"),
    ];
    if let Some(dt) = r.declared_total {
        rows.push(row("declared total", int(dt), "atoms", "config"));
    }
    let zoned = r.label == "zoned";
    let fixed = if zoned { "pinned" } else { "computed" };
    rows.extend([
        row("tau_r", us(r.tau_r), "us", "timing"),
        row("tau_ops", us(r.tau_ops), "us", "timing"),
        row("tau_SE", us(r.tau_se), "us", "timing"),
        row("tau_cycle", us(r.tau_cycle), "us", fixed),
        row("tau_factory", us(r.tau_factory), "us", "computed"),
        row("tau_Y_factory", us(r.tau_y_factory), "us", "computed"),
        row("throughput per cycle", format!("{:.4}", r.throughput), "states", fixed),
        row("throughput used", format!("{}", r.throughput_used), "states", fixed),
        row("depth", int(r.depth), "layers", "config"),
        row("T count", int(r.t_count), "gates", "config"),
        row("effective depth", int(r.effective_depth), "cycles", if r.effective_depth != r.effective_depth_computed { "pinned" } else { "computed" }),
        row("runtime", format!("{:.1}", r.runtime_seconds), "s", "computed"),
        row("runtime", format!("{:.3}", r.runtime_hours()), "h", "computed"),
    ]);
    rows
}

/// Deterministic text rendering of a report.
pub fn emit_report(r: &ResourceReport, format: ReportFormat) -> String {
    match format {
        ReportFormat::Json => serde_json::to_string_pretty(r).expect("report serializes") + "\n",
        ReportFormat::Csv => {
            let mut s = String::from("quantity,value,unit,source\n");
            for [q, v, u, src] in report_rows(r) {
                s.push_str(&format!("{q},{v},{u},{src}\n"));
            }
            s
        }
        ReportFormat::Table => {
            let rows = report_rows(r);
            let wq = rows.iter().map(|x| x[0].len()).max().unwrap_or(0).max(8);
            let wv = rows.iter().map(|x| x[1].len()).max().unwrap_or(0).max(5);
            let mut s = format!("{:<wq$}  {:>wv$}  {:<6}  {}\n", "quantity", "value", "unit", "source");
            s.push_str(&format!("{}\n", "-".repeat(wq + wv + 20)));
            for [q, v, u, src] in rows {
                s.push_str(&format!("{q:<wq$}  {v:>wv$}  {u:<6}  {src}\n"));
            }
            for n in &r.notes {
                s.push_str(&format!("* {n}\n"));
            }
            s
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table1_space_and_time() {
        let r = estimate(&ArchitectureConfig::table1()).unwrap();
        assert_eq!(r.atoms_per_cell, 161);
        assert_eq!(r.atoms_t_factory, 2093);
        assert_eq!(r.atoms_t_factories, 52_325);
        assert_eq!(r.atoms_y_factory, 322);
        assert_eq!(r.atoms_y_factories, 16_100);
        assert_eq!(r.atoms_grid, 16_100);
        assert_eq!(r.computed_total, 84_525);
        assert_eq!(r.computed_total, r.atoms_t_factories + r.atoms_y_factories + r.atoms_grid);
        assert!(r.declared_total_flag.as_deref().unwrap().contains("76475"));
        assert!((r.tau_cycle - 610e-6).abs() < 1e-12);
        assert_eq!(r.throughput_used, 5.0);
        assert!((r.runtime_seconds - 12_200.0).abs() < 1e-6);
    }

    #[test]
    fn clifford_only_is_depth_times_cycle() {
        let mut cfg = ArchitectureConfig::table1();
        cfg.d = 3;
        cfg.timing = TimingSource::Physics;
        cfg.factories.t = 0;
        cfg.factories.y = 0;
        cfg.workload = CircuitShape { width: 1, depth: 10, t_count: 0 };
        cfg.declared_total = None;
        let r = estimate(&cfg).unwrap();
        let dur = timing::durations(TimingSource::Physics, 3, &cfg.physics).unwrap();
        assert_eq!(r.runtime_seconds, 10.0 * dur.tau_cycle());
        assert!(r.declared_total_flag.is_none());
    }

    #[test]
    fn infeasible_without_factories() {
        let mut cfg = ArchitectureConfig::table1();
        cfg.factories.t = 0;
        assert!(matches!(estimate(&cfg), Err(EstimateError::Infeasible(_))));
    }

    #[test]
    fn bad_configs() {
        let mut cfg = ArchitectureConfig::table1();
        cfg.d = 8;
        assert!(matches!(estimate(&cfg), Err(EstimateError::Config(_))));
        let mut cfg = ArchitectureConfig::table1();
        cfg.workload.width = 101;
        assert!(matches!(estimate(&cfg), Err(EstimateError::Config(_))));
        assert!(zoned_baseline(&ArchitectureConfig::table1()).is_err());
    }

    #[test]
    fn zoned_numbers() {
        let r = estimate(&ArchitectureConfig::zoned_baseline()).unwrap();
        assert_eq!(r.tau_cycle, 900e-6);
        assert_eq!(r.throughput, 1.5);
        assert!((r.runtime_seconds - 59_400.0).abs() < 1e-6);
        assert!((r.runtime_hours() - 16.5).abs() < 1e-9);
        assert_eq!(r.effective_depth_computed, 66_666_667);
        assert_eq!(r.atoms_per_cell, 321);
        let game = estimate(&ArchitectureConfig::table1()).unwrap();
        let ratio = r.runtime_seconds / game.runtime_seconds;
        assert!((ratio - 4.87).abs() < 0.01, "{ratio}");
    }

    #[test]
    fn monotone_sweeps() {
        let mut prev = f64::INFINITY;
        for nt in 5..60 {
            let mut cfg = ArchitectureConfig::table1();
            cfg.factories.t = nt;
            let r = estimate(&cfg).unwrap();
            assert!(r.runtime_seconds <= prev);
            prev = r.runtime_seconds;
            let bound = r.t_count as f64 / r.throughput * r.tau_cycle * (1.0 - 1.0 / r.throughput);
            assert!(r.runtime_seconds >= bound);
        }
        let mut prev = 0.0;
        for t in [0u64, 1, 10, 1_000, 1_000_000, 100_000_000, 1_000_000_000] {
            let mut cfg = ArchitectureConfig::table1();
            cfg.workload.t_count = t;
            let r = estimate(&cfg).unwrap();
            assert!(r.runtime_seconds >= prev);
            prev = r.runtime_seconds;
        }
    }

    #[test]
    fn formats() {
        let r = estimate(&ArchitectureConfig::table1()).unwrap();
        let csv = emit_report(&r, ReportFormat::Csv);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "quantity,value,unit,source");
        assert_eq!(lines.len(), 1 + report_rows(&r).len());
        assert!(csv.contains("total,84525,atoms,computed"));
        let json = emit_report(&r, ReportFormat::Json);
        let back: ResourceReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back, r);
        let table = emit_report(&r, ReportFormat::Table);
        assert!(table.lines().last().unwrap().starts_with("* declared total 76475"));
        assert_eq!(table, emit_report(&r, ReportFormat::Table));
        assert!("xml".parse::<ReportFormat>().is_err());
    }

    #[test]
    fn toml_round_trip() {
        let cfg = ArchitectureConfig::zoned_baseline();
        assert_eq!(ArchitectureConfig::from_toml(&cfg.to_toml()).unwrap(), cfg);
        let partial = "d = 11\n[factories]\nt = 10\n[workload]\nwidth = 10\ndepth = 100\nt_count = 500\n";
        let c = ArchitectureConfig::from_toml(partial).unwrap();
        assert_eq!((c.d, c.factories.t, c.factories.y, c.workload.t_count), (11, 10, 50, 500));
        assert!(ArchitectureConfig::from_toml("d = \"nine\"").is_err());
    }
}
