//! Desk-scale laboratory for studying noisy similarity rewards in
//! instruction-following reinforcement learning.
//!
//! The crate provides:
//!
//! - seedable sparse-reward environments (`env`): a multi-room ordered-target
//!   grid task and a simplified platform room with a key/door objective;
//! - walkthrough instructions with ground-truth fulfillment predicates and the
//!   pointer reward machine that tracks the active instruction (`instruction`);
//! - synthetic similarity scorers that reproduce the classic failure modes of
//!   embedding-based reward models as exact identities, plus oracle reward
//!   models with controlled false-positive/false-negative noise (`scorer`);
//! - the binary mutual-information reward function: conformal threshold
//!   calibration, one-time binary gating, and frequency damping (`bimi`);
//! - a clipped-surrogate policy-gradient trainer with generalized advantage
//!   estimation and a count-based novelty bonus (`agent`);
//! - evaluation metrics: geometric score, reward heatmaps, reward-to-goal
//!   offsets, false-positive ratio, AUC (`metrics`);
//! - a numerical verifier for the theoretical claims behind heuristic-guided
//!   reward shaping: gap decomposition, pessimism, random-walk laws (`theory`);
//! - experiment orchestration and the `bimi-lab` CLI (`cli`).

pub mod agent;
pub mod bimi;
pub mod cli;
pub mod env;
pub mod error;
pub mod instruction;
pub mod metrics;
pub mod record;
pub mod scorer;
pub mod theory;

pub use error::{Error, Result};

/// Tool version embedded in manifests and run records.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
