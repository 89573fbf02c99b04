//! Random legal schedules for property tests.
//!
//! Randomness comes from a caller-supplied `pick(n)` returning a value in
//! `0..n`, so any generator (or a proptest strategy) can drive it.

use super::{FactoryKind, GridState, Mode, Op, Pos, ScheduledOp};
use super::engine::straight_path;

/// Builds `len` operations that are legal when run in order on `grid`.
/// The generator tracks only which slots are empty or idle; timing is left
/// to the engine.
pub fn random_legal_schedule(grid: &GridState, len: usize, mut pick: impl FnMut(usize) -> usize) -> Vec<ScheduledOp> {
    let mut idle: Vec<Vec<bool>> = vec![vec![false; grid.rows]; grid.cols];
    let is_cell = |p: Pos| grid.cell_at(p).is_some();
    let mut out = Vec::with_capacity(len);
    let mut clock = 0.0;
    let mut guard = 0;
    while out.len() < len && guard < 50 * len + 100 {
        guard += 1;
        let p = Pos::new(pick(grid.cols), pick(grid.rows));
        if !is_cell(p) {
            continue;
        }
        let op = if !idle[p.col][p.row] {
            let mut kinds = vec![Mode::Prep0, Mode::PrepPlus];
            for (m, k) in [(Mode::PrepT, FactoryKind::T), (Mode::PrepY, FactoryKind::Y)] {
                if grid.adjacent_factory(p, k) {
                    kinds.push(m);
                }
            }
            idle[p.col][p.row] = true;
            Op::Prep { at: p, mode: kinds[pick(kinds.len())] }
        } else {
            match pick(7) {
                0 => Op::Se { at: p },
                1 => Op::H { at: p },
                2 | 3 => {
                    let nbrs: Vec<Pos> = grid.neighbors(p).into_iter().filter(|q| is_cell(*q) && idle[q.col][q.row]).collect();
                    if nbrs.is_empty() {
                        Op::Idle { at: p, duration: pick(50) as f64 * 1e-4 }
                    } else {
                        Op::Cx { a: p, b: nbrs[pick(nbrs.len())] }
                    }
                }
                4 => {
                    let to = Pos::new(pick(grid.cols), pick(grid.rows));
                    let path = straight_path(p, to);
                    if to != p && path.iter().all(|q| is_cell(*q) && !idle[q.col][q.row]) {
                        idle[p.col][p.row] = false;
                        idle[to.col][to.row] = true;
                        Op::Route { from: p, to }
                    } else {
                        Op::Idle { at: p, duration: pick(50) as f64 * 1e-4 }
                    }
                }
                5 => {
                    idle[p.col][p.row] = false;
                    if pick(2) == 0 {
                        Op::Mx { at: p }
                    } else {
                        Op::Mz { at: p }
                    }
                }
                _ => Op::Idle { at: p, duration: pick(50) as f64 * 1e-4 },
            }
        };
        let time = if pick(4) == 0 {
            clock += pick(20) as f64 * 1e-4;
            Some(clock)
        } else {
            None
        };
        out.push(ScheduledOp { time, op, line: out.len() + 1 });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::super::{run_schedule, validate_timeline, GameConfig, Rates};
    use super::*;
    use crate::timing::DurationTable;
    use proptest::prelude::*;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn random_schedules_respect_budget(seeds in prop::collection::vec(any::<u32>(), 400), idle_rate in 1.0f64..60.0) {
            let mut grid = GridState::new(5, 5);
            grid.add_factory(Pos::new(0, 0), FactoryKind::T).unwrap();
            grid.add_factory(Pos::new(4, 4), FactoryKind::Y).unwrap();
            let mut i = 0;
            let sched = random_legal_schedule(&grid, 60, |n| { i += 1; seeds[i % seeds.len()] as usize % n });
            let cfg = GameConfig { rates: Rates { idle: idle_rate, h: 20.0, cx: 20.0 }, ..GameConfig::default() };
            let tl = run_schedule(&grid, &sched, &cfg, &DurationTable::pinned()).unwrap();
            prop_assert!(tl.max_acc <= cfg.p_budget + 1e-12);
            let v = validate_timeline(&grid, &tl, &cfg);
            prop_assert!(v.is_ok(), "{:?}", v);
            prop_assert!(tl.events.windows(2).all(|w| w[0].time <= w[1].time));
        }
    }
}
