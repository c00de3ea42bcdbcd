//! Scratch runner for the checked-in experiment matrices: runs one manifest
//! through the library, prints per-seed finals, medians, and sign tests.
//!
//! `cargo run --release -p bimi-lab --example tune -- experiments/gridseq-oracles.json [seeds]`

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;

use bimi_lab::agent::trainer::train;
use bimi_lab::bimi::calibrate_threshold;
use bimi_lab::cli::commands::build_setup;
use bimi_lab::cli::ops::{build_calibration, calibration_dir, median, write_threshold};
use bimi_lab::cli::ExperimentManifest;
use bimi_lab::metrics::fp_ratio;

fn sign_test_wins(wins: usize, n: usize) -> f64 {
    // one-sided binomial tail P(X >= wins), p = 0.5
    let mut p = 0.0;
    for k in wins..=n {
        let mut c = 1.0;
        for j in 0..k {
            c = c * (n - j) as f64 / (j + 1) as f64;
        }
        p += c / 2f64.powi(n as i32);
    }
    p
}

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let manifest_path = PathBuf::from(args.get(1).expect("manifest path"));
    let max_seeds: usize = args.get(2).map(|s| s.parse().unwrap()).unwrap_or(10);
    let loaded = ExperimentManifest::load(&manifest_path).unwrap();
    let out = tempfile::tempdir().unwrap();
    let out_dir = out.path().to_path_buf();

    // calibrate if any variant needs it
    if loaded.variants().iter().any(|v| v.reward.needs_threshold()) {
        let spec = &loaded.manifest.calibration;
        let set = build_calibration(&loaded.env, loaded.manifest.pipeline.window, spec.tasks, spec.seed)
            .unwrap();
        let scores: Vec<f64> = set.rows.iter().map(|r| r.score).collect();
        let thr = calibrate_threshold(&scores, spec.alpha).unwrap();
        println!("threshold: q_hat={:.4} n={}", thr.q_hat, thr.n);
        std::fs::create_dir_all(calibration_dir(&out_dir)).unwrap();
        write_threshold(&thr, &calibration_dir(&out_dir).join("threshold.json")).unwrap();
    }

    let seeds: Vec<u64> = loaded.manifest.seeds.iter().take(max_seeds).cloned().collect();
    let t0 = Instant::now();
    let mut cells = Vec::new();
    for variant in loaded.variants() {
        for &seed in &seeds {
            cells.push((variant.clone(), seed));
        }
    }
    let results: Vec<(String, u64, f64, f64, f64)> = cells
        .par_iter()
        .map(|(variant, seed)| {
            let setup = build_setup(&loaded, variant, *seed, &out_dir).unwrap();
            let rec = train(&setup, None).unwrap();
            (variant.name.clone(), *seed, rec.final_score(), rec.final_success_rate(), fp_ratio(&rec))
        })
        .collect();
    println!("total wall: {:.1}s ({} runs)", t0.elapsed().as_secs_f64(), results.len());

    let mut by: BTreeMap<String, Vec<(u64, f64, f64, f64)>> = BTreeMap::new();
    for (name, seed, score, sr, fpr) in results {
        by.entry(name).or_default().push((seed, score, sr, fpr));
    }
    for (name, rows) in &by {
        let mut scores: Vec<f64> = rows.iter().map(|r| r.1).collect();
        let mut srs: Vec<f64> = rows.iter().map(|r| r.2).collect();
        let mut fprs: Vec<f64> = rows.iter().map(|r| r.3).collect();
        println!(
            "{:<22} med_score={:.3} med_sr={:.2} med_fpr={:.3}  scores={:?}",
            name,
            median(&mut scores),
            median(&mut srs),
            median(&mut fprs),
            rows.iter().map(|r| (r.1 * 100.0).round() / 100.0).collect::<Vec<_>>()
        );
    }

    // pairwise sign tests of every ordered pair
    let names: Vec<&String> = by.keys().collect();
    for a in &names {
        for b in &names {
            if a == b {
                continue;
            }
            let ra = &by[*a];
            let rb = &by[*b];
            let mut wins = 0;
            let mut n = 0;
            for (x, y) in ra.iter().zip(rb.iter()) {
                if (x.1 - y.1).abs() > 1e-12 {
                    n += 1;
                    if x.1 > y.1 {
                        wins += 1;
                    }
                }
            }
            if n > 0 {
                println!("{a} > {b}: wins {wins}/{n}, p={:.4}", sign_test_wins(wins, n));
            }
        }
    }
    let _ = Path::new("");
}
