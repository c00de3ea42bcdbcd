//! Simulated oracle reward models with controlled noise.
//!
//! The oracles read ground-truth task state (which target cell belongs to
//! which instruction, which instruction is active) and inject configurable
//! noise on top of an otherwise exact reward:
//!
//! - `perfect`: +1 exactly when the active instruction's target state is
//!   reached, in order;
//! - `false_positive`: perfect, plus a small one-off bonus for cells within
//!   radius sigma of any target and for a seeded fraction of free cells;
//! - `false_negative`: perfect, except a seeded subset of targets never pays;
//! - `temporal_insensitive`: pays +1 for reaching any target state once per
//!   episode, ignoring instruction order.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_chacha::rand_core::SeedableRng;
use serde::{Deserialize, Serialize};

use crate::instruction::PointerState;

pub type Cell = (i32, i32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleKind {
    Perfect,
    FalsePositive,
    FalseNegative,
    TemporalInsensitive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleConfig {
    pub kind: OracleKind,
    /// Bonus radius sigma around target cells (false-positive oracle).
    pub fp_radius: f64,
    /// Fraction of free cells seeded as bonus cells (false-positive oracle).
    pub fp_cell_fraction: f64,
    /// One-off bonus magnitude.
    pub fp_bonus: f64,
    /// Per-target drop probability (false-negative oracle).
    pub fn_drop_fraction: f64,
    pub seed: u64,
}

impl OracleConfig {
    pub fn new(kind: OracleKind, seed: u64) -> Self {
        Self {
            kind,
            fp_radius: 2.0,
            fp_cell_fraction: 0.1,
            fp_bonus: 0.1,
            fn_drop_fraction: 0.1,
            seed,
        }
    }

    pub fn validate(&self) -> crate::Result<()> {
        if !(0.0..=1.0).contains(&self.fp_cell_fraction)
            || !(0.0..=1.0).contains(&self.fn_drop_fraction)
            || self.fp_radius < 0.0
        {
            return Err(crate::Error::Config(
                "oracle fractions must be in [0,1] and fp_radius >= 0".into(),
            ));
        }
        Ok(())
    }
}

/// What the oracle observed at one environment step.
#[derive(Debug, Clone, Default)]
pub struct OracleObservation {
    /// Agent cell after the step.
    pub cell: Cell,
    /// 1-based instruction indices whose designated target state was hit
    /// this step, regardless of order.
    pub target_hits: Vec<usize>,
}

/// Stateful oracle scorer. Per-episode state (paid bonus cells, paid
/// targets) resets on [`OracleScorer::reset`]. The drop set and bonus cells
/// are fixed at construction from the config seed.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OracleScorer {
    cfg: OracleConfig,
    dropped: BTreeSet<usize>,
    bonus_cells: BTreeSet<Cell>,
    paid_cells: BTreeSet<Cell>,
    paid_targets: BTreeSet<usize>,
}

impl OracleScorer {
    /// `targets` maps instruction index -> designated target cell;
    /// `free_cells` are all non-wall cells eligible for bonus seeding.
    pub fn new(cfg: OracleConfig, targets: &[(usize, Cell)], free_cells: &[Cell]) -> crate::Result<Self> {
        cfg.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let mut dropped = BTreeSet::new();
        if cfg.kind == OracleKind::FalseNegative {
            for (idx, _) in targets {
                if rng.gen::<f64>() < cfg.fn_drop_fraction {
                    dropped.insert(*idx);
                }
            }
        }
        let mut bonus_cells = BTreeSet::new();
        if cfg.kind == OracleKind::FalsePositive {
            let target_cells: BTreeSet<Cell> = targets.iter().map(|(_, c)| *c).collect();
            for cell in free_cells {
                if target_cells.contains(cell) {
                    continue;
                }
                let near = target_cells.iter().any(|t| {
                    let dx = (cell.0 - t.0) as f64;
                    let dy = (cell.1 - t.1) as f64;
                    (dx * dx + dy * dy).sqrt() <= cfg.fp_radius
                });
                if near {
                    bonus_cells.insert(*cell);
                }
            }
            let mut pool: Vec<Cell> = free_cells
                .iter()
                .filter(|c| !target_cells.contains(c) && !bonus_cells.contains(c))
                .cloned()
                .collect();
            pool.shuffle(&mut rng);
            let extra = ((free_cells.len() as f64) * cfg.fp_cell_fraction).round() as usize;
            for cell in pool.into_iter().take(extra) {
                bonus_cells.insert(cell);
            }
        }
        Ok(Self { cfg, dropped, bonus_cells, paid_cells: BTreeSet::new(), paid_targets: BTreeSet::new() })
    }

    /// Clear per-episode state.
    pub fn reset(&mut self) {
        self.paid_cells.clear();
        self.paid_targets.clear();
    }

    pub fn kind(&self) -> OracleKind {
        self.cfg.kind
    }

    /// Instruction indices whose reward was dropped (false-negative oracle).
    pub fn dropped(&self) -> &BTreeSet<usize> {
        &self.dropped
    }

    pub fn bonus_cells(&self) -> &BTreeSet<Cell> {
        &self.bonus_cells
    }

    /// Reward for one step. `ptr` is the pointer state *before* any
    /// advancement for this step, so `ptr.active` is the instruction the
    /// agent was pursuing when the step was taken.
    pub fn score(&mut self, obs: &OracleObservation, ptr: &PointerState) -> f64 {
        let mut reward = 0.0;
        match self.cfg.kind {
            OracleKind::Perfect | OracleKind::FalseNegative | OracleKind::FalsePositive => {
                let in_order_hit = !ptr.exhausted() && obs.target_hits.contains(&ptr.active);
                if in_order_hit && !self.dropped.contains(&ptr.active) {
                    reward += 1.0;
                }
                if self.cfg.kind == OracleKind::FalsePositive
                    && self.bonus_cells.contains(&obs.cell)
                    && self.paid_cells.insert(obs.cell)
                {
                    reward += self.cfg.fp_bonus;
                }
            }
            OracleKind::TemporalInsensitive => {
                for hit in &obs.target_hits {
                    if self.paid_targets.insert(*hit) {
                        reward += 1.0;
                    }
                }
            }
        }
        reward
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn obs(cell: Cell, hits: &[usize]) -> OracleObservation {
        OracleObservation { cell, target_hits: hits.to_vec() }
    }

    fn targets() -> Vec<(usize, Cell)> {
        vec![(1, (2, 2)), (2, (8, 2)), (3, (14, 2))]
    }

    fn free() -> Vec<Cell> {
        (0..20).flat_map(|x| (0..5).map(move |y| (x, y))).collect()
    }

    #[test]
    fn perfect_pays_only_active_in_order() {
        let mut o =
            OracleScorer::new(OracleConfig::new(OracleKind::Perfect, 1), &targets(), &free()).unwrap();
        let ptr = PointerState::new(3);
        assert_eq!(o.score(&obs((2, 2), &[1]), &ptr), 1.0);
        // hitting a later target while pointer is at 1 pays nothing
        assert_eq!(o.score(&obs((14, 2), &[3]), &ptr), 0.0);
        // empty step pays nothing
        assert_eq!(o.score(&obs((5, 2), &[]), &ptr), 0.0);
    }

    #[test]
    fn false_positive_bonus_is_one_off_per_cell() {
        let cfg = OracleConfig { fp_cell_fraction: 0.0, ..OracleConfig::new(OracleKind::FalsePositive, 1) };
        let mut o = OracleScorer::new(cfg, &targets(), &free()).unwrap();
        let ptr = PointerState::new(3);
        // within sigma=2 of target (2,2) but not on it
        let r1 = o.score(&obs((3, 2), &[]), &ptr);
        assert!((r1 - 0.1).abs() < 1e-12);
        let r2 = o.score(&obs((3, 2), &[]), &ptr);
        assert_eq!(r2, 0.0);
        o.reset();
        let r3 = o.score(&obs((3, 2), &[]), &ptr);
        assert!((r3 - 0.1).abs() < 1e-12);
    }

    #[test]
    fn false_positive_still_pays_targets() {
        let cfg = OracleConfig { fp_cell_fraction: 0.2, ..OracleConfig::new(OracleKind::FalsePositive, 7) };
        let mut o = OracleScorer::new(cfg, &targets(), &free()).unwrap();
        let ptr = PointerState::new(3);
        assert!(o.score(&obs((2, 2), &[1]), &ptr) >= 1.0);
    }

    #[test]
    fn false_negative_drops_are_seeded_and_final() {
        let cfg = OracleConfig { fn_drop_fraction: 1.0, ..OracleConfig::new(OracleKind::FalseNegative, 3) };
        let mut o = OracleScorer::new(cfg, &targets(), &free()).unwrap();
        assert_eq!(o.dropped().len(), 3);
        let ptr = PointerState::new(3);
        assert_eq!(o.score(&obs((2, 2), &[1]), &ptr), 0.0);
    }

    #[test]
    fn temporal_insensitive_ignores_order_once_per_target() {
        let mut o = OracleScorer::new(
            OracleConfig::new(OracleKind::TemporalInsensitive, 1),
            &targets(),
            &free(),
        )
        .unwrap();
        let ptr = PointerState::new(3);
        assert_eq!(o.score(&obs((14, 2), &[3]), &ptr), 1.0);
        assert_eq!(o.score(&obs((14, 2), &[3]), &ptr), 0.0);
        assert_eq!(o.score(&obs((2, 2), &[1]), &ptr), 1.0);
    }
}
