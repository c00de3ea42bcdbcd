//! Experiment manifests.
//!
//! One manifest describes one experiment matrix: an environment, a
//! walkthrough, a base reward pipeline, training hyperparameters, a seed
//! list, and optionally a list of named reward variants. Every referenced
//! file must exist at load time; paths are resolved relative to the
//! manifest's directory. No hidden global state: environment variables may
//! only override the output directory.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::agent::{RewardSourceConfig, TrainConfig};
use crate::bimi::RewardPipelineConfig;
use crate::env::EnvConfig;
use crate::error::{Error, Result};
use crate::instruction::Walkthrough;

/// Training-parameter patch applied over a named profile.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainSpec {
    /// `gridseq` (default) or `platform`.
    pub profile: Option<String>,
    pub gamma: Option<f64>,
    pub gae_lambda: Option<f64>,
    pub clip: Option<f64>,
    pub entropy_coef: Option<f64>,
    pub value_coef: Option<f64>,
    pub learning_rate: Option<f64>,
    pub ppo_epochs: Option<usize>,
    pub minibatches: Option<usize>,
    pub nproc: Option<usize>,
    pub nstep: Option<usize>,
    pub epochs: Option<usize>,
    pub intrinsic_coef: Option<f64>,
    pub normalize_advantage: Option<bool>,
    pub max_grad_norm: Option<f64>,
    pub hidden: Option<usize>,
    pub eval_every: Option<usize>,
    pub eval_episodes: Option<usize>,
}

impl TrainSpec {
    pub fn resolve(&self) -> Result<TrainConfig> {
        let mut cfg = match self.profile.as_deref() {
            None | Some("gridseq") => TrainConfig::gridseq_profile(),
            Some("platform") => TrainConfig::platform_profile(),
            Some(other) => {
                return Err(Error::Config(format!("unknown training profile `{other}`")))
            }
        };
        macro_rules! patch {
            ($($field:ident),*) => {
                $(if let Some(v) = self.$field { cfg.$field = v; })*
            };
        }
        patch!(
            gamma, gae_lambda, clip, entropy_coef, value_coef, learning_rate, ppo_epochs,
            minibatches, nproc, nstep, epochs, intrinsic_coef, normalize_advantage,
            max_grad_norm, hidden, eval_every, eval_episodes
        );
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Calibration-set generation parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationSpec {
    /// Held-out solver tasks to draw matched pairs from.
    #[serde(default = "default_tasks")]
    pub tasks: usize,
    #[serde(default = "default_cal_seed")]
    pub seed: u64,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
}

fn default_tasks() -> usize {
    200
}
fn default_cal_seed() -> u64 {
    9001
}
fn default_alpha() -> f64 {
    0.1
}

impl Default for CalibrationSpec {
    fn default() -> Self {
        Self { tasks: default_tasks(), seed: default_cal_seed(), alpha: default_alpha() }
    }
}

/// One named cell of the experiment matrix.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Variant {
    pub name: String,
    pub reward: RewardSourceConfig,
    /// Overrides the training config's intrinsic coefficient when set.
    pub intrinsic_coef: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentManifest {
    pub name: String,
    /// Path to the environment config JSON.
    pub env_config: PathBuf,
    /// Path to the walkthrough JSON-lines file.
    pub walkthrough: PathBuf,
    /// Base reward pipeline (used when no variants are given).
    pub pipeline: RewardPipelineConfig,
    #[serde(default)]
    pub train: TrainSpec,
    pub seeds: Vec<u64>,
    pub out_dir: PathBuf,
    #[serde(default)]
    pub version: Option<String>,
    #[serde(default)]
    pub calibration: CalibrationSpec,
    /// Optional experiment matrix; defaults to a single variant running the
    /// base pipeline.
    #[serde(default)]
    pub variants: Vec<Variant>,
}

/// A manifest with every referenced file loaded and validated.
#[derive(Debug, Clone)]
pub struct LoadedManifest {
    pub manifest: ExperimentManifest,
    pub dir: PathBuf,
    pub env: EnvConfig,
    pub walkthrough: Walkthrough,
}

impl ExperimentManifest {
    pub fn load(path: &Path) -> Result<LoadedManifest> {
        let raw = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let manifest: ExperimentManifest = serde_json::from_str(&raw)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        if manifest.seeds.is_empty() {
            return Err(Error::Config("manifest needs a non-empty seed list".into()));
        }
        manifest.pipeline.validate()?;
        if !(0.0 < manifest.calibration.alpha && manifest.calibration.alpha < 1.0) {
            return Err(Error::Config("calibration alpha must be in (0,1)".into()));
        }
        let dir = path.parent().unwrap_or(Path::new(".")).to_path_buf();
        let env = EnvConfig::load(&dir.join(&manifest.env_config))?;
        let walkthrough = Walkthrough::load(&dir.join(&manifest.walkthrough))?;
        for variant in &manifest.variants {
            variant.reward.validate()?;
        }
        Ok(LoadedManifest { manifest, dir, env, walkthrough })
    }
}

impl LoadedManifest {
    /// Output directory: explicit override, then the `BIMI_LAB_OUT`
    /// environment variable, then the manifest's own `out_dir` (relative to
    /// the manifest).
    pub fn out_dir(&self, override_dir: Option<&Path>) -> PathBuf {
        if let Some(d) = override_dir {
            return d.to_path_buf();
        }
        if let Ok(d) = std::env::var("BIMI_LAB_OUT") {
            if !d.is_empty() {
                return PathBuf::from(d);
            }
        }
        if self.manifest.out_dir.is_absolute() {
            self.manifest.out_dir.clone()
        } else {
            self.dir.join(&self.manifest.out_dir)
        }
    }

    /// The experiment matrix: declared variants, or the base pipeline as a
    /// single `default` variant.
    pub fn variants(&self) -> Vec<Variant> {
        if self.manifest.variants.is_empty() {
            vec![Variant {
                name: "default".into(),
                reward: RewardSourceConfig::Pipeline(self.manifest.pipeline.clone()),
                intrinsic_coef: None,
            }]
        } else {
            self.manifest.variants.clone()
        }
    }

    pub fn train_config(&self) -> Result<TrainConfig> {
        self.manifest.train.resolve()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::generate_gridseq;
    use std::io::Write as _;

    fn write_fixture(dir: &Path) -> PathBuf {
        let env_cfg = EnvConfig::Gridseq(generate_gridseq(3, 1, 1, 4, 2).unwrap());
        env_cfg.save(&dir.join("env.json")).unwrap();
        let env = env_cfg.build().unwrap();
        env.default_walkthrough().save(&dir.join("walkthrough.jsonl")).unwrap();
        let manifest = serde_json::json!({
            "name": "fixture",
            "env_config": "env.json",
            "walkthrough": "walkthrough.jsonl",
            "pipeline": {"mode": "bi", "beta": 0.5, "gamma": 0.95, "cap": 2.0, "window": 10},
            "train": {"profile": "gridseq", "epochs": 2, "nproc": 2, "nstep": 8, "eval_every": 2, "eval_episodes": 2, "hidden": 8},
            "seeds": [1, 2],
            "out_dir": "runs"
        });
        let path = dir.join("manifest.json");
        let mut f = fs::File::create(&path).unwrap();
        write!(f, "{}", serde_json::to_string_pretty(&manifest).unwrap()).unwrap();
        path
    }

    #[test]
    fn load_resolves_paths_and_profiles() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_fixture(dir.path());
        let loaded = ExperimentManifest::load(&path).unwrap();
        assert_eq!(loaded.manifest.seeds, vec![1, 2]);
        let cfg = loaded.train_config().unwrap();
        assert_eq!(cfg.epochs, 2);
        assert_eq!(cfg.gamma, 0.95);
        assert_eq!(loaded.variants().len(), 1);
        assert_eq!(loaded.out_dir(None), dir.path().join("runs"));
        assert_eq!(loaded.out_dir(Some(Path::new("/tmp/x"))), PathBuf::from("/tmp/x"));
    }

    #[test]
    fn missing_files_are_config_errors() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_fixture(dir.path());
        fs::remove_file(dir.path().join("walkthrough.jsonl")).unwrap();
        assert!(matches!(ExperimentManifest::load(&path), Err(Error::Io(_)) | Err(Error::Config(_))));
    }

    #[test]
    fn platform_profile_resolves() {
        let spec = TrainSpec { profile: Some("platform".into()), ..Default::default() };
        let cfg = spec.resolve().unwrap();
        assert_eq!(cfg.gamma, 0.99);
        assert!(!cfg.normalize_advantage);
        let bad = TrainSpec { profile: Some("nope".into()), ..Default::default() };
        assert!(bad.resolve().is_err());
    }
}
