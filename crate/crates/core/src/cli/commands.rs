//! The five experiment subcommands.

use std::fs;
use std::path::Path;

use rayon::prelude::*;

use crate::agent::trainer::{train, TrainSetup};
use crate::bimi::calibrate_threshold;
use crate::cli::manifest::LoadedManifest;
use crate::cli::ops::{
    build_calibration, calibration_dir, discover_runs, eval_table, read_threshold,
    render_eval_table, write_calibration_csv, write_eval_table, write_threshold,
};
use crate::error::{Error, Result};
use crate::record::config_hash;
use crate::scorer::probe::noise_probe;
use crate::theory::run_verification;

/// Generate matched pairs from held-out solver tasks, fit the conformal
/// threshold, and persist both under `<out>/calibration/`.
pub fn cmd_calibrate(
    loaded: &LoadedManifest,
    out_override: Option<&Path>,
    seed_override: Option<u64>,
) -> Result<()> {
    let out = calibration_dir(&loaded.out_dir(out_override));
    fs::create_dir_all(&out)?;
    let spec = &loaded.manifest.calibration;
    let seed = seed_override.unwrap_or(spec.seed);
    let set =
        build_calibration(&loaded.env, loaded.manifest.pipeline.window, spec.tasks, seed)?;
    let scores: Vec<f64> = set.rows.iter().map(|r| r.score).collect();
    let thr = calibrate_threshold(&scores, spec.alpha)?;
    write_calibration_csv(&set.rows, &out.join("calibration.csv"))?;
    write_threshold(&thr, &out.join("threshold.json"))?;
    println!(
        "calibrated threshold q_hat={:.6} (alpha={}, n={}) -> {}",
        thr.q_hat,
        thr.alpha,
        thr.n,
        out.display()
    );
    Ok(())
}

/// Score matched, mismatched, and manipulated pairs and persist the class
/// table and histograms under `<out>/probe/`.
pub fn cmd_noise_probe(
    loaded: &LoadedManifest,
    out_override: Option<&Path>,
    seed_override: Option<u64>,
) -> Result<()> {
    let out = loaded.out_dir(out_override).join("probe");
    fs::create_dir_all(&out)?;
    let spec = &loaded.manifest.calibration;
    let seed = seed_override.unwrap_or(spec.seed);
    let set =
        build_calibration(&loaded.env, loaded.manifest.pipeline.window, spec.tasks, seed)?;
    let report = noise_probe(&set.matched_pairs, seed)?;
    report.write_csv(&out.join("noise_probe.csv"))?;
    report.write_histograms(&out.join("noise_probe_histograms.json"))?;
    for c in &report.classes {
        println!(
            "{:<14} {:<14} n={:<5} mean={:.4} min={:.4} max={:.4}",
            c.class, c.kind, c.n, c.mean, c.min, c.max
        );
    }
    println!("probe tables -> {}", out.display());
    Ok(())
}

/// Build one `TrainSetup` for a (variant, seed) cell of the matrix.
pub fn build_setup(
    loaded: &LoadedManifest,
    variant: &crate::cli::manifest::Variant,
    seed: u64,
    out_dir: &Path,
) -> Result<TrainSetup> {
    let mut train_cfg = loaded.train_config()?;
    if let Some(coef) = variant.intrinsic_coef {
        train_cfg.intrinsic_coef = coef;
    }
    let threshold = if variant.reward.needs_threshold() {
        Some(read_threshold(&calibration_dir(out_dir).join("threshold.json")).map_err(|e| {
            Error::Config(format!("gated pipeline `{}` needs `calibrate` first: {e}", variant.name))
        })?)
    } else {
        None
    };
    let env_json = serde_json::to_value(&loaded.env)?;
    let manifest = serde_json::json!({
        "experiment": loaded.manifest.name,
        "variant": variant.name,
        "reward": variant.reward,
        "seed": seed,
        "train": train_cfg,
        "env_config": env_json,
        "env_config_hash": config_hash(&env_json)?,
        "threshold": threshold,
        "version": crate::VERSION,
    });
    Ok(TrainSetup {
        env: loaded.env.clone(),
        walkthrough: loaded.walkthrough.clone(),
        reward: variant.reward.clone(),
        threshold,
        train: train_cfg,
        seed,
        manifest,
    })
}

/// Run the whole experiment matrix: every variant crossed with every seed,
/// seeds in parallel, each run landing in `<out>/<variant>/seed-<n>/`.
pub fn cmd_train(
    loaded: &LoadedManifest,
    out_override: Option<&Path>,
    seed_override: Option<u64>,
) -> Result<()> {
    let out = loaded.out_dir(out_override);
    fs::create_dir_all(&out)?;
    let seeds: Vec<u64> = match seed_override {
        Some(s) => vec![s],
        None => loaded.manifest.seeds.clone(),
    };
    let mut cells = Vec::new();
    for variant in loaded.variants() {
        for &seed in &seeds {
            cells.push((variant.clone(), seed));
        }
    }
    let results: Vec<Result<String>> = cells
        .par_iter()
        .map(|(variant, seed)| {
            let run_dir = out.join(&variant.name).join(format!("seed-{seed}"));
            let setup = build_setup(loaded, variant, *seed, &out)?;
            let record = train(&setup, Some(&run_dir))?;
            Ok(format!(
                "{}/seed-{}: score={:.4} success={:.2}",
                variant.name,
                seed,
                record.final_score(),
                record.final_success_rate()
            ))
        })
        .collect();
    for r in results {
        println!("{}", r?);
    }
    println!("runs -> {}", out.display());
    Ok(())
}

/// Aggregate finished runs into the per-variant comparison table.
pub fn cmd_eval(
    loaded: &LoadedManifest,
    out_override: Option<&Path>,
    baseline: Option<&str>,
) -> Result<()> {
    let out = loaded.out_dir(out_override);
    let runs = discover_runs(&out)?;
    let rows = eval_table(&runs, baseline)?;
    write_eval_table(&rows, &out.join("comparison.csv"))?;
    print!("{}", render_eval_table(&rows));
    println!("table -> {}", out.join("comparison.csv").display());
    Ok(())
}

/// Run the theory verification suite; non-zero exit when any claim fails.
pub fn cmd_theory(seed: u64, out: Option<&Path>) -> Result<()> {
    let report = run_verification(seed);
    let rendered = serde_json::to_string_pretty(&report)?;
    match out {
        Some(path) => {
            if let Some(parent) = path.parent() {
                if !parent.as_os_str().is_empty() {
                    fs::create_dir_all(parent)?;
                }
            }
            fs::write(path, &rendered)?;
            println!("report -> {}", path.display());
        }
        None => println!("{rendered}"),
    }
    for claim in &report.claims {
        println!("{} {}", if claim.pass { "PASS" } else { "FAIL" }, claim.id);
    }
    if !report.all_pass {
        return Err(Error::Verification("one or more theory claims failed".into()));
    }
    Ok(())
}
