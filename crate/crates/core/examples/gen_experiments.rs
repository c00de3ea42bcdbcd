//! Regenerates the checked-in experiment definitions under `experiments/`.
//!
//! Run from the workspace root:
//! `cargo run -p bimi-lab --example gen_experiments`

use std::fs;
use std::path::Path;

use bimi_lab::env::gridseq::Target;
use bimi_lab::env::{EnvConfig, PlatformRoomConfig};

fn target(kind: &str, color: &str, room: usize) -> Target {
    Target { kind: kind.into(), color: color.into(), room }
}

fn pipeline_json(mode: &str, gamma: f64) -> serde_json::Value {
    serde_json::json!({
        "source": "pipeline", "mode": mode, "beta": 0.5, "gamma": gamma, "cap": 2.0, "window": 10
    })
}

fn oracle_json(kind: &str, fp_fraction: f64, fn_fraction: f64) -> serde_json::Value {
    serde_json::json!({
        "source": "oracle",
        "oracle": {
            "kind": kind, "fp_radius": 2.0, "fp_cell_fraction": fp_fraction,
            "fp_bonus": 0.1, "fn_drop_fraction": fn_fraction, "seed": 0
        },
        "beta": 0.5, "gamma": 0.95
    })
}

fn write(dir: &Path, name: &str, value: &serde_json::Value) {
    fs::write(dir.join(name), serde_json::to_string_pretty(value).unwrap()).unwrap();
}

fn main() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../experiments");
    fs::create_dir_all(&root).unwrap();

    // --- grid task: one row of 3 rooms, 3 ordered targets; the second
    // target sits next to the spawn so order-insensitive reward models are
    // baited into touching it first ---
    let grid_cfg = bimi_lab::env::gridseq::GridSeqConfig {
        rows: 1,
        cols: 3,
        room_size: 5,
        targets: vec![
            target("ball", "red", 1),
            target("key", "blue", 0),
            target("box", "green", 2),
        ],
        seed: 50,
        max_steps: 160,
    };
    let grid_env = EnvConfig::Gridseq(grid_cfg);
    grid_env.save(&root.join("gridseq-env.json")).unwrap();
    grid_env.build().unwrap().default_walkthrough().save(&root.join("gridseq-walkthrough.jsonl")).unwrap();

    let seeds: Vec<u64> = (1..=10).collect();
    let grid_train = serde_json::json!({
        "profile": "gridseq", "nproc": 8, "nstep": 256, "epochs": 200,
        "eval_every": 25, "eval_episodes": 10, "hidden": 64, "normalize_advantage": false
    });

    // oracle-noise comparison at matched noise fraction x = 20%
    write(
        &root,
        "gridseq-oracles.json",
        &serde_json::json!({
            "name": "gridseq-oracles",
            "env_config": "gridseq-env.json",
            "walkthrough": "gridseq-walkthrough.jsonl",
            "pipeline": pipeline_json("continuous_window", 0.95),
            "train": grid_train,
            "seeds": seeds,
            "out_dir": "runs/gridseq-oracles",
            "variants": [
                {"name": "perfect", "reward": oracle_json("perfect", 0.0, 0.0), "intrinsic_coef": 0.02},
                {"name": "false_negative", "reward": oracle_json("false_negative", 0.0, 0.2), "intrinsic_coef": 0.02},
                {"name": "false_positive", "reward": oracle_json("false_positive", 0.2, 0.0), "intrinsic_coef": 0.02},
                {"name": "temporal_insensitive", "reward": oracle_json("temporal_insensitive", 0.0, 0.0), "intrinsic_coef": 0.02}
            ]
        }),
    );

    // similarity pipeline comparison: continuous vs gated vs damped
    write(
        &root,
        "gridseq-pipeline.json",
        &serde_json::json!({
            "name": "gridseq-pipeline",
            "env_config": "gridseq-env.json",
            "walkthrough": "gridseq-walkthrough.jsonl",
            "pipeline": {"mode": "continuous_window", "beta": 0.5, "gamma": 0.95, "cap": 2.0, "window": 10},
            "train": grid_train,
            "seeds": seeds,
            "out_dir": "runs/gridseq-pipeline",
            "calibration": {"tasks": 334, "seed": 9001, "alpha": 0.1},
            "variants": [
                {"name": "continuous", "reward": pipeline_json("continuous_window", 0.95)},
                {"name": "bi", "reward": pipeline_json("bi", 0.95)},
                {"name": "bimi", "reward": pipeline_json("bimi", 0.95)}
            ]
        }),
    );

    // --- platform room: synergy between the gated reward and novelty ---
    let mut room = PlatformRoomConfig::generate(77, 14, 9).unwrap();
    room.max_steps = 300;
    let room_env = EnvConfig::Platform(room);
    room_env.save(&root.join("platform-env.json")).unwrap();
    room_env.build().unwrap().default_walkthrough().save(&root.join("platform-walkthrough.jsonl")).unwrap();

    write(
        &root,
        "platform-synergy.json",
        &serde_json::json!({
            "name": "platform-synergy",
            "env_config": "platform-env.json",
            "walkthrough": "platform-walkthrough.jsonl",
            "pipeline": {"mode": "bimi", "beta": 0.5, "gamma": 0.99, "cap": 2.0, "window": 10},
            "train": {
                "profile": "platform", "nproc": 8, "nstep": 128, "epochs": 80,
                "eval_every": 20, "eval_episodes": 10, "hidden": 64, "learning_rate": 3e-4
            },
            "seeds": seeds,
            "out_dir": "runs/platform-synergy",
            "calibration": {"tasks": 60, "seed": 55, "alpha": 0.1},
            "variants": [
                {"name": "bimi", "reward": pipeline_json("bimi", 0.99)},
                {"name": "intrinsic", "reward": {"source": "none"}, "intrinsic_coef": 0.05},
                {"name": "bimi_intrinsic", "reward": pipeline_json("bimi", 0.99), "intrinsic_coef": 0.05}
            ]
        }),
    );

    println!("experiments -> {}", root.display());
}
