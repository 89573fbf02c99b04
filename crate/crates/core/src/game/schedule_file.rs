//! Line-based schedule files.
//!
//! ```text
//! # directives
//! grid 5x5
//! factory T 0,0
//! factorycell 1,0
//! # operations: [time] op args, coordinates are col,row
//! prep 0 1,1
//! 250us h 1,1
//! cx 1,1 2,1
//! route 1,1 3,1
//! idle 3,1 2ms
//! mz 3,1
//! ```
//!
//! Times and durations accept `s`, `ms` and `us` suffixes; bare numbers are
//! seconds. Prep kinds are `0`, `+`, `T`, `Y` and `Phi`.

use super::{run_schedule, validate_timeline, GameConfig, GameError, GridState, Mode, Op, Pos, ScheduledOp, Violation};
use crate::timing::DurationTable;

#[derive(Debug, Clone, PartialEq)]
pub struct ScheduleFile {
    pub grid: GridState,
    pub ops: Vec<ScheduledOp>,
}

pub fn parse_time(tok: &str) -> Option<f64> {
    let (num, scale) = if let Some(n) = tok.strip_suffix("us") {
        (n, 1e-6)
    } else if let Some(n) = tok.strip_suffix("ms") {
        (n, 1e-3)
    } else if let Some(n) = tok.strip_suffix('s') {
        (n, 1.0)
    } else {
        (tok, 1.0)
    };
    let v: f64 = num.parse().ok()?;
    (v.is_finite() && v >= 0.0).then_some(v * scale)
}

fn parse_pos(tok: &str) -> Option<Pos> {
    let (c, r) = tok.split_once(',')?;
    Some(Pos::new(c.trim().parse().ok()?, r.trim().parse().ok()?))
}

fn prep_mode(tok: &str) -> Option<Mode> {
    Some(match tok {
        "0" | "zero" => Mode::Prep0,
        "+" | "plus" => Mode::PrepPlus,
        "T" | "t" => Mode::PrepT,
        "Y" | "y" => Mode::PrepY,
        "Phi" | "phi" => Mode::PrepPhi,
        _ => return None,
    })
}

/// Parses a schedule file, collecting every syntax error.
pub fn parse_schedule(text: &str) -> Result<ScheduleFile, Vec<GameError>> {
    let mut grid: Option<GridState> = None;
    let mut ops = Vec::new();
    let mut errors = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let l = raw.split('#').next().unwrap_or("").trim();
        if l.is_empty() {
            continue;
        }
        let err = |msg: String| GameError::Parse { line, msg };
        let mut toks: Vec<&str> = l.split_whitespace().collect();
        match toks[0] {
            "grid" => {
                let dims = toks.get(1).and_then(|d| d.split_once('x')).and_then(|(c, r)| Some((c.parse().ok()?, r.parse().ok()?)));
                match dims {
                    Some((c, r)) if c > 0 && r > 0 && toks.len() == 2 => grid = Some(GridState::new(c, r)),
                    _ => errors.push(err(format!("expected `grid <cols>x<rows>`, got `{l}`"))),
                }
                continue;
            }
            "factory" | "factorycell" => {
                let Some(g) = grid.as_mut() else {
                    errors.push(err("`grid` must come first".into()));
                    continue;
                };
                let res = if toks[0] == "factory" {
                    match (toks.get(1).and_then(|k| k.parse().ok()), toks.get(2).and_then(|p| parse_pos(p))) {
                        (Some(kind), Some(p)) if toks.len() == 3 => g.add_factory(p, kind),
                        _ => Err(err(format!("expected `factory <T|Y|Phi> col,row`, got `{l}`"))),
                    }
                } else {
                    match toks.get(1).and_then(|p| parse_pos(p)) {
                        Some(p) if toks.len() == 2 => g.mark_factory_cell(p),
                        _ => Err(err(format!("expected `factorycell col,row`, got `{l}`"))),
                    }
                };
                if let Err(e) = res {
                    errors.push(match e {
                        GameError::Config(msg) => err(msg),
                        e => e,
                    });
                }
                continue;
            }
            _ => {}
        }
        let time = match toks[0].chars().next() {
            Some(c) if c.is_ascii_digit() || c == '.' => match parse_time(toks[0]) {
                Some(t) => {
                    toks.remove(0);
                    Some(t)
                }
                None => {
                    errors.push(err(format!("bad time `{}`", toks[0])));
                    continue;
                }
            },
            _ => None,
        };
        let Some((&name, args)) = toks.split_first() else {
            errors.push(err("time without an operation".into()));
            continue;
        };
        let pos = |k: usize| args.get(k).and_then(|t| parse_pos(t));
        let op = match (name, args.len()) {
            ("prep", 2) => prep_mode(args[0]).zip(pos(1)).map(|(mode, at)| Op::Prep { at, mode }),
            ("se", 1) => pos(0).map(|at| Op::Se { at }),
            ("h", 1) => pos(0).map(|at| Op::H { at }),
            ("mx", 1) => pos(0).map(|at| Op::Mx { at }),
            ("mz", 1) => pos(0).map(|at| Op::Mz { at }),
            ("cx", 2) => pos(0).zip(pos(1)).map(|(a, b)| Op::Cx { a, b }),
            ("route", 2) => pos(0).zip(pos(1)).map(|(from, to)| Op::Route { from, to }),
            ("idle", 2) => pos(0).zip(parse_time(args[1])).map(|(at, duration)| Op::Idle { at, duration }),
            _ => None,
        };
        match op {
            Some(op) => ops.push(ScheduledOp { time, op, line }),
            None => errors.push(err(format!("cannot parse operation `{l}`"))),
        }
    }
    if grid.is_none() && !ops.is_empty() {
        errors.push(GameError::Parse {
            line: ops[0].line,
            msg: "missing `grid` directive".into(),
        });
    }
    if errors.is_empty() {
        Ok(ScheduleFile {
            grid: grid.unwrap_or_else(|| GridState::new(1, 1)),
            ops,
        })
    } else {
        Err(errors)
    }
}

/// Parses, runs and replays a schedule; returns all diagnostics found.
pub fn validate_schedule_text(text: &str, cfg: &GameConfig, dur: &DurationTable) -> Vec<GameError> {
    let file = match parse_schedule(text) {
        Ok(f) => f,
        Err(errs) => return errs,
    };
    match run_schedule(&file.grid, &file.ops, cfg, dur) {
        Ok(tl) => match validate_timeline(&file.grid, &tl, cfg) {
            Ok(()) => vec![],
            Err(v) => vec![GameError::Violation(v)],
        },
        Err(e) => vec![e],
    }
}

/// Convenience for callers holding a single violation.
pub fn first_violation(errs: &[GameError]) -> Option<&Violation> {
    errs.iter().find_map(|e| match e {
        GameError::Violation(v) => Some(v),
        _ => None,
    })
}
