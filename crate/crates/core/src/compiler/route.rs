use std::collections::VecDeque;

use super::CompileError;
use crate::game::{straight_path, GridState, Mode, Pos};

fn passable(grid: &GridState, p: Pos) -> bool {
    grid.cell_at(p).is_some_and(|c| grid.cells[c].mode == Mode::Empty)
}

fn vertical_first(a: Pos, b: Pos) -> Vec<Pos> {
    let mut out = Vec::new();
    let mut p = a;
    while p.row != b.row {
        p.row = if b.row > p.row { p.row + 1 } else { p.row - 1 };
        out.push(p);
    }
    while p.col != b.col {
        p.col = if b.col > p.col { p.col + 1 } else { p.col - 1 };
        out.push(p);
    }
    out
}

/// Swap sequence moving the occupied cell at `src` to the empty cell at
/// `dst`: horizontal leg first, then vertical first, then the shortest
/// corridor found by breadth-first search. Each returned position is one
/// R5 swap.
pub fn route(grid: &GridState, src: Pos, dst: Pos) -> Result<Vec<Pos>, CompileError> {
    let blocked = || CompileError::RoutingBlocked { from: src, to: dst };
    let occupied = grid.cell_at(src).is_some_and(|c| grid.cells[c].mode != Mode::Empty);
    if !occupied {
        return Err(blocked());
    }
    if src == dst {
        return Ok(vec![]);
    }
    if !passable(grid, dst) {
        return Err(blocked());
    }
    for path in [straight_path(src, dst), vertical_first(src, dst)] {
        if path.iter().all(|&p| passable(grid, p)) {
            return Ok(path);
        }
    }
    let idx = |p: Pos| p.row * grid.cols + p.col;
    let mut prev: Vec<Option<Pos>> = vec![None; grid.cols * grid.rows];
    let mut seen = vec![false; grid.cols * grid.rows];
    let mut queue = VecDeque::from([src]);
    seen[idx(src)] = true;
    while let Some(p) = queue.pop_front() {
        if p == dst {
            let mut path = vec![p];
            let mut q = p;
            while let Some(r) = prev[idx(q)] {
                if r == src {
                    break;
                }
                path.push(r);
                q = r;
            }
            path.reverse();
            return Ok(path);
        }
        for n in grid.neighbors(p) {
            if !seen[idx(n)] && passable(grid, n) {
                seen[idx(n)] = true;
                prev[idx(n)] = Some(p);
                queue.push_back(n);
            }
        }
    }
    Err(blocked())
}

/// Shortest route from `src` to any empty neighbour of `target`; the empty
/// path when they already touch.
pub fn route_to_adjacent(grid: &GridState, src: Pos, target: Pos) -> Result<Vec<Pos>, CompileError> {
    if src.adjacent(target) {
        return Ok(vec![]);
    }
    let mut cands: Vec<Pos> = grid.neighbors(target).into_iter().filter(|&p| passable(grid, p)).collect();
    cands.sort_by_key(|p| p.manhattan(src));
    let mut best: Option<Vec<Pos>> = None;
    for c in cands {
        if best.as_ref().is_some_and(|b| b.len() <= c.manhattan(src)) {
            break;
        }
        if let Ok(path) = route(grid, src, c) {
            if best.as_ref().is_none_or(|b| path.len() < b.len()) {
                best = Some(path);
            }
        }
    }
    best.ok_or(CompileError::RoutingBlocked { from: src, to: target })
}

/// Undirected edges crossed by a route starting at `src`.
pub fn path_edges(src: Pos, path: &[Pos]) -> Vec<(Pos, Pos)> {
    let mut out = Vec::with_capacity(path.len());
    let mut p = src;
    for &q in path {
        out.push(if p < q { (p, q) } else { (q, p) });
        p = q;
    }
    out
}
