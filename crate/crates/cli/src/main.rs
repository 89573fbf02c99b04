use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand};

use tsgame::compiler::{self, parse_circuit, FactorySupply, Layout, LowerOptions, Workload};
use tsgame::css_code::{builtin_code, StabilizerTable};
use tsgame::distillation::{analyze_truncated, build_circuit, pipeline, Postprocess, TargetGate, EXHAUSTIVE_LIMIT};
use tsgame::estimator::{emit_report, estimate, ArchitectureConfig, EstimateError, Preset, ReportFormat};
use tsgame::factory_sim::{simulate_t_factory, simulate_y_factory, FactoryConfig};
use tsgame::game::schedule_file::{parse_schedule, validate_schedule_text};
use tsgame::game::{run_schedule, GameConfig};
use tsgame::timing::{durations, sweep_csv, Profile, TimingConfig, TimingSource};

#[derive(Parser)]
#[command(name = "tsgame", version, about = "Transversal surface-code game toolkit")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Distillation circuit and its acceptance/error analysis as JSON.
    Distill {
        /// Builtin code name or a stabilizer table file.
        #[arg(long, default_value = "reed_muller15")]
        code: String,
        #[arg(long, default_value = "T")]
        gate: TargetGate,
        #[arg(long, default_value_t = 1e-3)]
        p: f64,
        /// `detect` or `correct:<t>`.
        #[arg(long, default_value = "detect")]
        mode: Postprocess,
        /// Enumerate only patterns up to this weight.
        #[arg(long)]
        max_weight: Option<usize>,
    },
    /// Physics-mode durations as CSV, in seconds.
    Timing {
        #[arg(long, default_value_t = 9)]
        d: usize,
        #[arg(long, default_value = "sta")]
        profile: Profile,
        /// Odd distances `dmin:dmax`.
        #[arg(long)]
        sweep: Option<String>,
    },
    /// Runs a schedule file and reports rule violations with line numbers.
    Validate {
        file: PathBuf,
        #[arg(long, default_value = "pinned")]
        timing: TimingSource,
        #[arg(long, default_value_t = 9)]
        d: usize,
        /// Write the event timeline as JSON.
        #[arg(long)]
        timeline: Option<PathBuf>,
    },
    /// Lowers a logical circuit (or a synthetic workload) onto the grid.
    Compile {
        #[arg(long, conflicts_with = "workload", required_unless_present = "workload")]
        circuit: Option<PathBuf>,
        /// Synthetic workload, e.g. "W=100 tcount=1e8 tperlayer=5".
        #[arg(long)]
        workload: Option<Workload>,
        #[arg(long, default_value = "25x5")]
        grid: String,
        #[arg(long, default_value = "pinned")]
        timing: TimingSource,
        #[arg(long, default_value_t = 9)]
        d: usize,
        #[arg(long, default_value_t = 25)]
        t_factories: usize,
        #[arg(long, default_value_t = 50)]
        y_factories: usize,
        /// Allow remote CX through Bell pairs.
        #[arg(long)]
        phi: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Pipelined |T> factory timing as JSON, plus an optional CSV trace.
    Factory {
        #[arg(long, default_value = "reed_muller15")]
        code: String,
        #[arg(long, default_value_t = 4)]
        nmb: usize,
        #[arg(long, default_value = "pinned")]
        timing: TimingSource,
        #[arg(long, default_value_t = 9)]
        d: usize,
        #[arg(long)]
        no_reorder: bool,
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Space and time estimate.
    Estimate {
        #[arg(long, conflicts_with = "preset", required_unless_present = "preset")]
        config: Option<PathBuf>,
        #[arg(long)]
        preset: Option<Preset>,
        #[arg(long, default_value = "table")]
        format: ReportFormat,
    },
}

fn load_code(spec: &str) -> Result<StabilizerTable> {
    let code = if Path::new(spec).is_file() {
        let text = fs::read_to_string(spec).with_context(|| format!("reading {spec}"))?;
        StabilizerTable::from_text(&text)?
    } else {
        builtin_code(spec)?
    };
    Ok(if code.is_standard_form() { code } else { code.standard_form()? })
}

fn write_or_print(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn parse_grid(s: &str) -> Result<(usize, usize)> {
    let (c, r) = s.split_once(['x', 'X']).ok_or_else(|| anyhow!("grid must look like 25x5"))?;
    Ok((c.trim().parse()?, r.trim().parse()?))
}

fn distill(code: &str, gate: TargetGate, p: f64, mode: Postprocess, max_weight: Option<usize>) -> Result<()> {
    let code = load_code(code)?;
    let circ = build_circuit(&code, gate, mode)?;
    let sched = pipeline(&circ);
    let cutoff = max_weight.or((code.n() > EXHAUSTIVE_LIMIT).then_some(4));
    let a = analyze_truncated(&code, p, mode, cutoff)?;
    let report = serde_json::json!({
        "n": code.n(),
        "k": code.k(),
        "gate": gate.to_string(),
        "p": p,
        "analysis": a,
        "circuit": circ,
        "pipeline": sched,
    });
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}

fn timing(d: usize, profile: Profile, sweep: Option<String>) -> Result<()> {
    let cfg = TimingConfig { profile, ..TimingConfig::default() };
    let (lo, hi) = match sweep {
        Some(s) => {
            let (a, b) = s.split_once(':').ok_or_else(|| anyhow!("sweep must look like 3:25"))?;
            (a.parse()?, b.parse()?)
        }
        None => (d, d),
    };
    if lo > hi {
        bail!("empty sweep {lo}:{hi}");
    }
    print!("{}", sweep_csv(lo, hi, &cfg)?);
    Ok(())
}

fn validate(file: &Path, source: TimingSource, d: usize, timeline: Option<&Path>) -> Result<ExitCode> {
    let text = fs::read_to_string(file).with_context(|| format!("reading {}", file.display()))?;
    let cfg = GameConfig::default();
    let dur = durations(source, d, &TimingConfig::default())?;
    let errs = validate_schedule_text(&text, &cfg, &dur);
    if !errs.is_empty() {
        for e in &errs {
            println!("{}: {e}", file.display());
        }
        return Ok(ExitCode::from(1));
    }
    let f = parse_schedule(&text).map_err(|e| anyhow!("{:?}", e))?;
    let tl = run_schedule(&f.grid, &f.ops, &cfg, &dur)?;
    println!(
        "ok: {} ops, {} events, {} interposed SE, makespan {:.1} us, peak error {:.3e}",
        f.ops.len(),
        tl.events.len(),
        tl.interposed_total(),
        tl.makespan * 1e6,
        tl.max_acc
    );
    if let Some(p) = timeline {
        write_or_print(Some(p), &serde_json::to_string_pretty(&tl)?)?;
    }
    Ok(ExitCode::SUCCESS)
}

#[allow(clippy::too_many_arguments)]
fn compile(
    circuit: Option<&Path>,
    workload: Option<Workload>,
    grid: &str,
    source: TimingSource,
    d: usize,
    n_t: usize,
    n_y: usize,
    phi: bool,
    out: Option<&Path>,
) -> Result<()> {
    let dur = durations(source, d, &TimingConfig::default())?;
    let rm15 = builtin_code("reed_muller15")?;
    let t = simulate_t_factory(&FactoryConfig::table1(rm15, &dur), &dur)?;
    let y = simulate_y_factory(&dur)?;
    let (supply, _) = FactorySupply::from_factories(n_t, &t, n_y, &y, dur.tau_cycle());
    let sched = match (circuit, workload) {
        (Some(path), _) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            let circ = parse_circuit(&text)?;
            let (c, r) = parse_grid(grid)?;
            let layout = Layout::new(c, r)?;
            compiler::schedule(&circ, &layout, &dur, &supply, LowerOptions { phi })?
        }
        (None, Some(w)) => compiler::schedule_workload(&w, &dur, &supply)?,
        (None, None) => bail!("pass --circuit or --workload"),
    };
    eprintln!(
        "{} cycles ({} stall, {} spill), makespan {:.6} s",
        sched.cycle_count, sched.stall_cycles, sched.spill_cycles, sched.makespan
    );
    write_or_print(out, &(serde_json::to_string_pretty(&sched)? + "\n"))
}

fn factory(code: &str, nmb: usize, source: TimingSource, d: usize, no_reorder: bool, trace: Option<&Path>) -> Result<()> {
    let dur = durations(source, d, &TimingConfig::default())?;
    let mut cfg = FactoryConfig::table1(load_code(code)?, &dur);
    cfg.n_mb = nmb;
    cfg.reorder = !no_reorder;
    let r = simulate_t_factory(&cfg, &dur)?;
    println!("{}", serde_json::to_string_pretty(&r)?);
    if let Some(p) = trace {
        write_or_print(Some(p), &r.trace_csv())?;
    }
    Ok(())
}

fn run_estimate(config: Option<&Path>, preset: Option<Preset>, format: ReportFormat) -> Result<ExitCode> {
    let cfg = match (config, preset) {
        (Some(p), _) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            ArchitectureConfig::from_toml(&text)?
        }
        (None, Some(pr)) => pr.config(),
        (None, None) => bail!("pass --config or --preset"),
    };
    match estimate(&cfg) {
        Ok(r) => {
            print!("{}", emit_report(&r, format));
            Ok(ExitCode::SUCCESS)
        }
        Err(e @ EstimateError::Infeasible(_)) => {
            eprintln!("error: {e}");
            Ok(ExitCode::from(2))
        }
        Err(e) => Err(e.into()),
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.cmd {
        Cmd::Distill { code, gate, p, mode, max_weight } => distill(&code, gate, p, mode, max_weight)?,
        Cmd::Timing { d, profile, sweep } => timing(d, profile, sweep)?,
        Cmd::Validate { file, timing, d, timeline } => return validate(&file, timing, d, timeline.as_deref()),
        Cmd::Compile { circuit, workload, grid, timing, d, t_factories, y_factories, phi, out } => compile(
            circuit.as_deref(),
            workload,
            &grid,
            timing,
            d,
            t_factories,
            y_factories,
            phi,
            out.as_deref(),
        )?,
        Cmd::Factory { code, nmb, timing, d, no_reorder, trace } => {
            factory(&code, nmb, timing, d, no_reorder, trace.as_deref())?
        }
        Cmd::Estimate { config, preset, format } => return run_estimate(config.as_deref(), preset, format),
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
