//! Clipped-surrogate policy-gradient trainer with parallel rollout
//! collection, generalized advantage estimation, and a count-based novelty
//! bonus.

pub mod buffer;
pub mod intrinsic;
pub mod policy;
pub mod ppo;
pub mod trainer;

use serde::{Deserialize, Serialize};

use crate::bimi::RewardPipelineConfig;
use crate::error::{Error, Result};
use crate::scorer::oracle::OracleConfig;

pub use buffer::{compute_gae, RolloutBuffer, Transition};
pub use intrinsic::{intrinsic_bonus, VisitCounts};
pub use policy::{Adam, PolicyModel};
pub use ppo::{ppo_update, LossStats};
pub use trainer::{train, TrainSetup};

/// Optimizer and rollout hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub gamma: f64,
    pub gae_lambda: f64,
    pub clip: f64,
    pub entropy_coef: f64,
    pub value_coef: f64,
    pub learning_rate: f64,
    pub ppo_epochs: usize,
    pub minibatches: usize,
    pub nproc: usize,
    pub nstep: usize,
    pub epochs: usize,
    pub intrinsic_coef: f64,
    pub normalize_advantage: bool,
    pub max_grad_norm: f64,
    pub hidden: usize,
    pub eval_every: usize,
    pub eval_episodes: usize,
}

impl TrainConfig {
    /// Grid-sequence profile (full-size budget: 250 x 512 x 8 frames).
    pub fn gridseq_profile() -> Self {
        Self {
            gamma: 0.95,
            gae_lambda: 0.65,
            clip: 0.2,
            entropy_coef: 0.01,
            value_coef: 0.5,
            learning_rate: 3e-4,
            ppo_epochs: 3,
            minibatches: 8,
            nproc: 8,
            nstep: 512,
            epochs: 250,
            intrinsic_coef: 0.0,
            normalize_advantage: true,
            max_grad_norm: 0.5,
            hidden: 64,
            eval_every: 10,
            eval_episodes: 10,
        }
    }

    /// Platform-room profile; advantages are not normalized here.
    pub fn platform_profile() -> Self {
        Self {
            gamma: 0.99,
            gae_lambda: 0.95,
            clip: 0.1,
            entropy_coef: 0.001,
            learning_rate: 1e-4,
            normalize_advantage: false,
            ..Self::gridseq_profile()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0 < self.gamma && self.gamma <= 1.0) || !(0.0 < self.gae_lambda && self.gae_lambda <= 1.0)
        {
            return Err(Error::Config("gamma and gae_lambda must be in (0,1]".into()));
        }
        if self.clip <= 0.0 {
            return Err(Error::Config("clip must be positive".into()));
        }
        if self.nproc == 0 || self.nstep == 0 || self.epochs == 0 {
            return Err(Error::Config("nproc, nstep and epochs must be positive".into()));
        }
        if self.minibatches == 0 || self.ppo_epochs == 0 {
            return Err(Error::Config("minibatches and ppo_epochs must be positive".into()));
        }
        if self.eval_every == 0 || self.eval_episodes == 0 {
            return Err(Error::Config("eval cadence must be positive".into()));
        }
        Ok(())
    }
}

/// Where the auxiliary reward channel comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum RewardSourceConfig {
    /// Extrinsic reward only.
    None,
    /// Synthetic similarity scorer through the configured pipeline.
    Pipeline(RewardPipelineConfig),
    /// Simulated oracle with controlled noise; combined with the same
    /// `r_e + (1 - beta) gamma r_v` rule as the pipeline.
    Oracle { oracle: OracleConfig, beta: f64, gamma: f64 },
}

impl RewardSourceConfig {
    pub fn needs_threshold(&self) -> bool {
        matches!(self, RewardSourceConfig::Pipeline(cfg) if cfg.mode.needs_threshold())
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            RewardSourceConfig::None => Ok(()),
            RewardSourceConfig::Pipeline(cfg) => cfg.validate(),
            RewardSourceConfig::Oracle { oracle, beta, gamma } => {
                oracle.validate()?;
                if !(0.0..=1.0).contains(beta) || !(0.0 < *gamma && *gamma < 1.0) {
                    return Err(Error::Config("oracle beta/gamma out of range".into()));
                }
                Ok(())
            }
        }
    }
}
