//! Breadth-first planning over environment grids.
//!
//! The solver is the independent oracle for solvability and the source of
//! expert trajectories for calibration and probing. Plans visit the target
//! cells in instruction order; ties between shortest paths are broken by a
//! seeded neighbor shuffle so different seeds yield different but still
//! optimal-length paths.

use std::collections::VecDeque;

use rand::seq::SliceRandom;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{Action, Cell, EnvInstance};

/// Walkability mask used for planning. `hazards` are walkable-but-absorbing
/// cells a plan must never enter.
#[derive(Debug, Clone)]
pub struct Passability {
    pub width: i32,
    pub height: i32,
    pub walkable: Vec<bool>,
    pub hazards: Vec<Cell>,
}

impl Passability {
    fn ok(&self, cell: Cell) -> bool {
        cell.0 >= 0
            && cell.1 >= 0
            && cell.0 < self.width
            && cell.1 < self.height
            && self.walkable[(cell.1 * self.width + cell.0) as usize]
            && !self.hazards.contains(&cell)
    }
}

/// All cells reachable from `start` by 4-neighbor moves.
pub fn reachable_cells(pass: &Passability, start: Cell) -> Vec<Cell> {
    let mut seen = vec![false; (pass.width * pass.height) as usize];
    let mut queue = VecDeque::from([start]);
    let mut out = Vec::new();
    if !pass.ok(start) {
        return out;
    }
    seen[(start.1 * pass.width + start.0) as usize] = true;
    while let Some(cell) = queue.pop_front() {
        out.push(cell);
        for action in [Action::Up, Action::Down, Action::Left, Action::Right] {
            let (dx, dy) = action.delta().unwrap();
            let next = (cell.0 + dx, cell.1 + dy);
            if pass.ok(next) && !seen[(next.1 * pass.width + next.0) as usize] {
                seen[(next.1 * pass.width + next.0) as usize] = true;
                queue.push_back(next);
            }
        }
    }
    out
}

/// Shortest move sequence from `from` to `to`, with seeded tie-breaking.
pub fn path_to(pass: &Passability, from: Cell, to: Cell, seed: u64) -> Option<Vec<Action>> {
    if from == to {
        return Some(Vec::new());
    }
    if !pass.ok(from) || !pass.ok(to) {
        return None;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let idx = |c: Cell| (c.1 * pass.width + c.0) as usize;
    let mut parent: Vec<Option<(Cell, Action)>> = vec![None; (pass.width * pass.height) as usize];
    let mut seen = vec![false; (pass.width * pass.height) as usize];
    seen[idx(from)] = true;
    let mut queue = VecDeque::from([from]);
    while let Some(cell) = queue.pop_front() {
        let mut moves = [Action::Up, Action::Down, Action::Left, Action::Right];
        moves.shuffle(&mut rng);
        for action in moves {
            let (dx, dy) = action.delta().unwrap();
            let next = (cell.0 + dx, cell.1 + dy);
            if !pass.ok(next) || seen[idx(next)] {
                continue;
            }
            seen[idx(next)] = true;
            parent[idx(next)] = Some((cell, action));
            if next == to {
                let mut actions = Vec::new();
                let mut cur = to;
                while cur != from {
                    let (prev, act) = parent[idx(cur)].unwrap();
                    actions.push(act);
                    cur = prev;
                }
                actions.reverse();
                return Some(actions);
            }
            queue.push_back(next);
        }
    }
    None
}

/// Plan a full rewarding action sequence for a grid-sequence environment:
/// walk to each target in order and interact.
pub fn solve_gridseq(env: &super::GridSeqEnv, seed: u64) -> Option<Vec<Action>> {
    let pass = env.passability();
    let mut pos = env.state().position;
    let mut plan = Vec::new();
    for (i, (_, cell)) in env.target_cells().into_iter().enumerate() {
        let leg = path_to(&pass, pos, cell, seed.wrapping_add(i as u64))?;
        plan.extend(leg);
        plan.push(Action::Interact);
        pos = cell;
    }
    Some(plan)
}

/// Plan a full rewarding action sequence for a platform environment: visit
/// the intermediate targets in instruction order, interacting where the
/// target requires it (key pickup, door opening).
pub fn solve_platform(env: &super::PlatformEnv, seed: u64) -> Option<Vec<Action>> {
    let pass = env.passability();
    let mut pos = env.state().position;
    let mut plan = Vec::new();
    for (i, (cell, needs_interact)) in env.plan_waypoints().into_iter().enumerate() {
        let leg = path_to(&pass, pos, cell, seed.wrapping_add(i as u64))?;
        plan.extend(leg);
        if needs_interact {
            plan.push(Action::Interact);
        }
        pos = cell;
    }
    Some(plan)
}

/// Plan for any environment instance.
pub fn solve(env: &EnvInstance, seed: u64) -> Option<Vec<Action>> {
    match env {
        EnvInstance::GridSeq(e) => solve_gridseq(e, seed),
        EnvInstance::Platform(e) => solve_platform(e, seed),
    }
}
