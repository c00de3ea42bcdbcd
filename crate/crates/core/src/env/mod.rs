//! Deterministic, seedable sparse-reward environments.
//!
//! Two desk-scale environments share one action interface:
//!
//! - [`gridseq`]: a multi-room grid where target objects must be touched in
//!   a fixed order; reward 1 only when the whole sequence is completed.
//! - [`platform`]: a simplified platform room with a ladder, conveyor, rope,
//!   absorbing cliff cells, and a key/door objective.
//!
//! Dynamics are fully deterministic: replaying an action sequence from a
//! reset reproduces the exact step results. Events are canonical lowercase
//! token strings emitted on touches, pickups, and landmark cells; they are
//! the only channel the similarity scorers see.

pub mod gridseq;
pub mod platform;
pub mod solver;

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instruction::Walkthrough;

pub use gridseq::{generate_gridseq, GridSeqConfig, GridSeqEnv};
pub use platform::{PlatformEnv, PlatformRoomConfig};

pub type Cell = (i32, i32);

/// The unified 6-action set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
#[repr(u8)]
pub enum Action {
    Up = 0,
    Down = 1,
    Left = 2,
    Right = 3,
    Interact = 4,
    Noop = 5,
}

impl Action {
    pub const COUNT: usize = 6;
    pub const ALL: [Action; 6] =
        [Action::Up, Action::Down, Action::Left, Action::Right, Action::Interact, Action::Noop];

    pub fn from_index(i: usize) -> Option<Action> {
        Action::ALL.get(i).copied()
    }

    pub fn delta(&self) -> Option<(i32, i32)> {
        match self {
            Action::Up => Some((0, -1)),
            Action::Down => Some((0, 1)),
            Action::Left => Some((-1, 0)),
            Action::Right => Some((1, 0)),
            _ => None,
        }
    }
}

/// Episode state shared by both environments.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnvState {
    pub position: Cell,
    /// Carried item token multiset.
    pub inventory: BTreeMap<String, u32>,
    /// Per-target completion flags, monotone within an episode.
    pub flags: Vec<bool>,
    pub t: usize,
    pub done: bool,
    /// Episode ended in an absorbing failure (cliff).
    pub failed: bool,
}

impl EnvState {
    fn fresh(position: Cell, n_flags: usize) -> Self {
        Self {
            position,
            inventory: BTreeMap::new(),
            flags: vec![false; n_flags],
            t: 0,
            done: false,
            failed: false,
        }
    }

    /// First incomplete flag as a 1-based instruction index, or n+1.
    pub fn next_required(&self) -> usize {
        self.flags.iter().position(|f| !f).map(|i| i + 1).unwrap_or(self.flags.len() + 1)
    }
}

/// Outcome of one step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepResult {
    pub state: EnvState,
    /// Sparse extrinsic reward, 0 or 1.
    pub reward: f64,
    /// Events emitted this step, in order.
    pub events: Vec<String>,
    pub done: bool,
    /// 1-based instruction indices whose designated target state was hit
    /// this step, regardless of order (engine-internal oracle channel).
    pub target_hits: Vec<usize>,
    /// Instruction index newly completed in order this step, if any.
    pub completed: Option<usize>,
}

/// Serializable environment configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum EnvConfig {
    Gridseq(GridSeqConfig),
    Platform(PlatformRoomConfig),
}

impl EnvConfig {
    pub fn build(&self) -> Result<EnvInstance> {
        match self {
            EnvConfig::Gridseq(cfg) => Ok(EnvInstance::GridSeq(GridSeqEnv::new(cfg)?)),
            EnvConfig::Platform(cfg) => Ok(EnvInstance::Platform(PlatformEnv::new(cfg)?)),
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let raw = std::fs::read_to_string(path)?;
        serde_json::from_str(&raw)
            .map_err(|e| Error::Config(format!("{}: {}", path.display(), e)))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }
}

/// A concrete environment instance. Instances are independent; many can be
/// stepped in parallel, but a single instance has one caller at a time.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum EnvInstance {
    GridSeq(GridSeqEnv),
    Platform(PlatformEnv),
}

macro_rules! dispatch {
    ($self:ident, $env:ident => $body:expr) => {
        match $self {
            EnvInstance::GridSeq($env) => $body,
            EnvInstance::Platform($env) => $body,
        }
    };
}

impl EnvInstance {
    pub fn reset(&mut self, seed: u64) -> EnvState {
        dispatch!(self, e => e.reset(seed))
    }

    pub fn step(&mut self, action: Action) -> Result<StepResult> {
        dispatch!(self, e => e.step(action))
    }

    pub fn state(&self) -> &EnvState {
        dispatch!(self, e => e.state())
    }

    pub fn goal_reached(&self) -> bool {
        dispatch!(self, e => e.goal_reached())
    }

    pub fn max_steps(&self) -> usize {
        dispatch!(self, e => e.max_steps())
    }

    pub fn grid_size(&self) -> (i32, i32) {
        dispatch!(self, e => e.grid_size())
    }

    /// Designated target cell per instruction index.
    pub fn target_cells(&self) -> Vec<(usize, Cell)> {
        dispatch!(self, e => e.target_cells())
    }

    /// All walkable cells.
    pub fn free_cells(&self) -> Vec<Cell> {
        dispatch!(self, e => e.free_cells())
    }

    /// Item tokens that can appear in the inventory, in observation order.
    pub fn inventory_vocab(&self) -> Vec<String> {
        dispatch!(self, e => e.inventory_vocab())
    }

    pub fn flag_count(&self) -> usize {
        self.state().flags.len()
    }

    /// The expert walkthrough matching this environment's targets.
    pub fn default_walkthrough(&self) -> Walkthrough {
        dispatch!(self, e => e.default_walkthrough())
    }

    pub fn render(&self) -> String {
        dispatch!(self, e => e.render())
    }
}
