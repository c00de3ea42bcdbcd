//! Persisted training-run records.
//!
//! A run lands on disk as a directory:
//!
//! ```text
//! run_dir/
//!   manifest.json    # full configuration, seed, tool version, config hash
//!   metrics.csv      # one row per epoch: reward means by source, losses
//!   eval.csv         # one row per evaluation: score, success rate, s_k...
//!   rewards.jsonl    # every nonzero reward emission: step, cell, source...
//!   episodes.jsonl   # per-episode summaries with fulfillment times
//!   policy.json      # final policy parameters
//! ```
//!
//! The CSV float formatting is fixed so reruns with the same manifest and
//! seed are byte-identical.

use std::fs;
use std::io::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which pipeline produced a reward emission.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RewardSource {
    Extrinsic,
    /// Similarity or oracle auxiliary reward (the `r_v` channel).
    Similarity,
    Intrinsic,
}

/// One nonzero reward emission during training.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardEvent {
    pub epoch: usize,
    pub env: usize,
    /// Run-unique episode id.
    pub episode: u64,
    /// Step index within the episode.
    pub t: usize,
    pub cell: (i32, i32),
    pub source: RewardSource,
    pub value: f64,
    /// Active instruction pointer when the reward was emitted.
    pub pointer: usize,
}

/// Ground-truth summary of one finished (or truncated) episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeSummary {
    pub episode: u64,
    pub env: usize,
    pub length: usize,
    /// First step at which instruction k's required events completed, by
    /// 1-based index; None if never fulfilled in this episode.
    pub fulfill_times: Vec<Option<usize>>,
    /// Episode ended with the sparse reward collected.
    pub success: bool,
    pub failed: bool,
}

/// Per-epoch training statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub epoch: usize,
    pub mean_r_e: f64,
    pub mean_r_v: f64,
    pub mean_r_i: f64,
    pub mean_r_t: f64,
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub episodes: usize,
}

/// Per-evaluation statistics. `success_rates[k-1]` is instruction k's
/// fulfillment rate over the evaluation episodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRow {
    pub epoch: usize,
    pub score: f64,
    pub success_rate: f64,
    pub mean_return: f64,
    pub success_rates: Vec<f64>,
}

/// A complete training run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunRecord {
    /// Opaque manifest blob: configs, seed, tool version.
    pub manifest: serde_json::Value,
    pub grid_size: (i32, i32),
    pub n_instructions: usize,
    pub metrics: Vec<MetricsRow>,
    pub evals: Vec<EvalRow>,
    pub reward_events: Vec<RewardEvent>,
    pub episodes: Vec<EpisodeSummary>,
    pub policy: serde_json::Value,
}

impl RunRecord {
    /// Final evaluation score (the run's headline number).
    pub fn final_score(&self) -> f64 {
        self.evals.last().map(|e| e.score).unwrap_or(0.0)
    }

    pub fn final_success_rate(&self) -> f64 {
        self.evals.last().map(|e| e.success_rate).unwrap_or(0.0)
    }

    /// (epoch, mean extrinsic return) evaluation series for AUC.
    pub fn eval_series(&self) -> Vec<(f64, f64)> {
        self.evals.iter().map(|e| (e.epoch as f64, e.mean_return)).collect()
    }

    pub fn metrics_csv(&self) -> String {
        let mut out = String::from(
            "epoch,mean_r_e,mean_r_v,mean_r_i,mean_r_t,policy_loss,value_loss,entropy,episodes\n",
        );
        for m in &self.metrics {
            out.push_str(&format!(
                "{},{:.9},{:.9},{:.9},{:.9},{:.9},{:.9},{:.9},{}\n",
                m.epoch,
                m.mean_r_e,
                m.mean_r_v,
                m.mean_r_i,
                m.mean_r_t,
                m.policy_loss,
                m.value_loss,
                m.entropy,
                m.episodes
            ));
        }
        out
    }

    pub fn eval_csv(&self) -> String {
        let mut header = String::from("epoch,score,success_rate,mean_return");
        for k in 1..=self.n_instructions {
            header.push_str(&format!(",s{k}"));
        }
        header.push('\n');
        let mut out = header;
        for e in &self.evals {
            out.push_str(&format!(
                "{},{:.9},{:.9},{:.9}",
                e.epoch, e.score, e.success_rate, e.mean_return
            ));
            for s in &e.success_rates {
                out.push_str(&format!(",{s:.9}"));
            }
            out.push('\n');
        }
        out
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(&self.manifest)?)?;
        fs::write(dir.join("metrics.csv"), self.metrics_csv())?;
        fs::write(dir.join("eval.csv"), self.eval_csv())?;
        let mut rewards = fs::File::create(dir.join("rewards.jsonl"))?;
        for ev in &self.reward_events {
            writeln!(rewards, "{}", serde_json::to_string(ev)?)?;
        }
        let mut episodes = fs::File::create(dir.join("episodes.jsonl"))?;
        for ep in &self.episodes {
            writeln!(episodes, "{}", serde_json::to_string(ep)?)?;
        }
        fs::write(dir.join("policy.json"), serde_json::to_string(&self.policy)?)?;
        let meta = serde_json::json!({
            "grid_size": self.grid_size,
            "n_instructions": self.n_instructions,
            "metrics": self.metrics,
            "evals": self.evals,
        });
        fs::write(dir.join("summary.json"), serde_json::to_string_pretty(&meta)?)?;
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let manifest: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(dir.join("manifest.json"))?)?;
        let summary: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(dir.join("summary.json"))?)?;
        let grid_size = serde_json::from_value(summary["grid_size"].clone())?;
        let n_instructions = serde_json::from_value(summary["n_instructions"].clone())?;
        let metrics = serde_json::from_value(summary["metrics"].clone())?;
        let evals = serde_json::from_value(summary["evals"].clone())?;
        let mut reward_events = Vec::new();
        for line in fs::read_to_string(dir.join("rewards.jsonl"))?.lines() {
            if !line.trim().is_empty() {
                reward_events.push(serde_json::from_str(line)?);
            }
        }
        let mut episodes = Vec::new();
        for line in fs::read_to_string(dir.join("episodes.jsonl"))?.lines() {
            if !line.trim().is_empty() {
                episodes.push(serde_json::from_str(line)?);
            }
        }
        let policy: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(dir.join("policy.json"))?)?;
        Ok(Self {
            manifest,
            grid_size,
            n_instructions,
            metrics,
            evals,
            reward_events,
            episodes,
            policy,
        })
    }
}

/// SHA-256 hex digest of a serialized blob, embedded in manifests so any
/// artifact can be traced back to its exact configuration.
pub fn config_hash(value: &serde_json::Value) -> Result<String> {
    use sha2::{Digest, Sha256};
    let canonical = serde_json::to_vec(value)?;
    let mut hasher = Sha256::new();
    hasher.update(&canonical);
    Ok(format!("{:x}", hasher.finalize()))
}

/// Verify that a blob matches its recorded hash.
pub fn verify_hash(value: &serde_json::Value, expected: &str) -> Result<()> {
    let actual = config_hash(value)?;
    if actual != expected {
        return Err(Error::Config(format!("config hash mismatch: {actual} != {expected}")));
    }
    Ok(())
}
