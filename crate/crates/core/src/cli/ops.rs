//! Experiment operations behind the CLI: expert traces, calibration-set
//! construction, probe datasets, and run-table aggregation.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::bimi::ConformalThreshold;
use crate::env::{solver, EnvConfig};
use crate::error::{Error, Result};
use crate::instruction::Walkthrough;
use crate::metrics::{auc_total_reward, fp_ratio};
use crate::record::RunRecord;
use crate::scorer::manipulate::Pair;
use crate::scorer::score_window;

/// Replay of a solver plan: timestamped events plus per-instruction
/// completion steps.
#[derive(Debug, Clone)]
pub struct ExpertTrace {
    pub events: Vec<(usize, String)>,
    pub completions: Vec<usize>,
}

/// Solve an environment instance and replay the plan, recording events and
/// ground-truth completion steps for every instruction.
pub fn expert_trace(cfg: &EnvConfig, walkthrough: &Walkthrough, tie_seed: u64) -> Result<ExpertTrace> {
    let mut env = cfg.build()?;
    env.reset(0);
    let plan = solver::solve(&env, tie_seed)
        .ok_or_else(|| Error::Generation("environment is not solvable".into()))?;
    let n = walkthrough.len();
    let mut events = Vec::new();
    let mut matched = vec![0usize; n];
    let mut completions = vec![None; n];
    for action in plan {
        let sr = env.step(action)?;
        for ev in &sr.events {
            events.push((sr.state.t, ev.clone()));
            for k in 0..n {
                if completions[k].is_some() {
                    continue;
                }
                let required = &walkthrough.instructions[k].events;
                if required[matched[k]] == *ev {
                    matched[k] += 1;
                    if matched[k] == required.len() {
                        completions[k] = Some(sr.state.t);
                    }
                }
            }
        }
        if sr.done {
            break;
        }
    }
    let completions: Option<Vec<usize>> = completions.into_iter().collect();
    let completions = completions
        .ok_or_else(|| Error::Generation("expert plan left an instruction unfulfilled".into()))?;
    Ok(ExpertTrace { events, completions })
}

/// One calibration record: a matched trajectory-instruction score.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CalibrationRow {
    pub trajectory: usize,
    pub instruction: usize,
    pub score: f64,
}

/// Matched pairs and scores from held-out solver tasks.
///
/// For grid tasks each held-out task is a fresh layout seeded from
/// `seed + i`; the platform room keeps its layout and varies the solver's
/// tie-breaking instead. The score of pair (task, instruction k) is the
/// window similarity at k's completion step, exactly what the gate sees at
/// run time. The returned pairs carry the event segment belonging to each
/// instruction for the probe harness.
pub struct CalibrationSet {
    pub rows: Vec<CalibrationRow>,
    pub matched_pairs: Vec<Pair>,
}

pub fn build_calibration(
    env: &EnvConfig,
    window: usize,
    tasks: usize,
    seed: u64,
) -> Result<CalibrationSet> {
    if tasks == 0 {
        return Err(Error::Config("calibration needs at least one task".into()));
    }
    let mut rows = Vec::new();
    let mut matched_pairs = Vec::new();
    for i in 0..tasks {
        let task_cfg = match env {
            EnvConfig::Gridseq(cfg) => {
                let held_out = crate::env::generate_gridseq(
                    seed.wrapping_add(1 + i as u64),
                    cfg.rows,
                    cfg.cols,
                    cfg.room_size,
                    cfg.targets.len(),
                )?;
                EnvConfig::Gridseq(held_out)
            }
            EnvConfig::Platform(cfg) => EnvConfig::Platform(cfg.clone()),
        };
        let task_env = task_cfg.build()?;
        let walkthrough = task_env.default_walkthrough();
        let trace = expert_trace(&task_cfg, &walkthrough, seed.wrapping_add(101 + i as u64))?;
        let mut prev_t = 0usize;
        for (k, instr) in walkthrough.instructions.iter().enumerate() {
            let t_done = trace.completions[k];
            let in_window: Vec<String> = trace
                .events
                .iter()
                .filter(|(t, _)| *t > t_done.saturating_sub(window) && *t <= t_done)
                .map(|(_, e)| e.clone())
                .collect();
            let score = score_window(&in_window, in_window.len().max(1), instr);
            rows.push(CalibrationRow { trajectory: i, instruction: k + 1, score });
            let segment: Vec<String> = trace
                .events
                .iter()
                .filter(|(t, _)| *t > prev_t && *t <= t_done)
                .map(|(_, e)| e.clone())
                .collect();
            if !segment.is_empty() {
                matched_pairs.push(Pair::new(segment, instr.text.clone()));
            }
            prev_t = t_done;
        }
    }
    Ok(CalibrationSet { rows, matched_pairs })
}

/// CSV with the documented header `trajectory,instruction,score`.
pub fn write_calibration_csv(rows: &[CalibrationRow], path: &Path) -> Result<()> {
    let mut out = fs::File::create(path)?;
    writeln!(out, "trajectory,instruction,score")?;
    for r in rows {
        writeln!(out, "{},{},{:.9}", r.trajectory, r.instruction, r.score)?;
    }
    Ok(())
}

pub fn read_threshold(path: &Path) -> Result<ConformalThreshold> {
    let raw = fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("threshold file {}: {e}", path.display())))?;
    Ok(serde_json::from_str(&raw)?)
}

pub fn write_threshold(thr: &ConformalThreshold, path: &Path) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(thr)?)?;
    Ok(())
}

/// Location of the calibration artifacts inside an experiment output dir.
pub fn calibration_dir(out_dir: &Path) -> PathBuf {
    out_dir.join("calibration")
}

/// Discover per-variant run directories under an experiment output dir:
/// `out/<variant>/seed-<n>/`.
pub fn discover_runs(out_dir: &Path) -> Result<Vec<(String, PathBuf)>> {
    let mut found = Vec::new();
    for entry in fs::read_dir(out_dir)? {
        let entry = entry?;
        if !entry.file_type()?.is_dir() {
            continue;
        }
        let variant = entry.file_name().to_string_lossy().to_string();
        if variant == "calibration" || variant == "probe" {
            continue;
        }
        for run in fs::read_dir(entry.path())? {
            let run = run?;
            if run.file_type()?.is_dir() && run.path().join("metrics.csv").exists() {
                found.push((variant.clone(), run.path()));
            }
        }
    }
    found.sort();
    Ok(found)
}

/// One aggregated row of the comparison table.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalTableRow {
    pub variant: String,
    pub runs: usize,
    pub median_score: f64,
    pub median_auc: f64,
    pub median_fp_ratio: f64,
    pub median_success_rate: f64,
    /// Relative score difference vs the baseline variant, in percent.
    pub score_vs_baseline_pct: Option<f64>,
}

pub fn median(values: &mut Vec<f64>) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

fn run_auc(record: &RunRecord) -> f64 {
    let series = record.eval_series();
    if series.len() >= 2 {
        auc_total_reward(&series).unwrap_or(0.0)
    } else {
        series.first().map(|(_, r)| *r).unwrap_or(0.0)
    }
}

/// Aggregate discovered runs into per-variant medians with a
/// percent-vs-baseline column. `baseline` falls back to `continuous` when
/// present, else the alphabetically first variant.
pub fn eval_table(
    runs: &[(String, PathBuf)],
    baseline: Option<&str>,
) -> Result<Vec<EvalTableRow>> {
    if runs.is_empty() {
        return Err(Error::Config("no finished runs found".into()));
    }
    let mut by_variant: std::collections::BTreeMap<String, Vec<RunRecord>> = Default::default();
    for (variant, dir) in runs {
        by_variant.entry(variant.clone()).or_default().push(RunRecord::load(dir)?);
    }
    let baseline_name = match baseline {
        Some(b) => {
            if !by_variant.contains_key(b) {
                return Err(Error::Config(format!("baseline variant `{b}` not found")));
            }
            b.to_string()
        }
        None => {
            if by_variant.contains_key("continuous") {
                "continuous".to_string()
            } else {
                by_variant.keys().next().unwrap().clone()
            }
        }
    };

    let mut rows = Vec::new();
    let mut baseline_score = f64::NAN;
    for (variant, records) in &by_variant {
        let mut scores: Vec<f64> = records.iter().map(|r| r.final_score()).collect();
        let score = median(&mut scores);
        if *variant == baseline_name {
            baseline_score = score;
        }
        rows.push(EvalTableRow {
            variant: variant.clone(),
            runs: records.len(),
            median_score: score,
            median_auc: median(&mut records.iter().map(run_auc).collect()),
            median_fp_ratio: median(&mut records.iter().map(fp_ratio).collect()),
            median_success_rate: median(
                &mut records.iter().map(|r| r.final_success_rate()).collect(),
            ),
            score_vs_baseline_pct: None,
        });
    }
    for row in &mut rows {
        if row.variant != baseline_name && baseline_score.abs() > 1e-12 {
            row.score_vs_baseline_pct =
                Some((row.median_score - baseline_score) / baseline_score * 100.0);
        }
    }
    Ok(rows)
}

pub fn write_eval_table(rows: &[EvalTableRow], path: &Path) -> Result<()> {
    let mut out = fs::File::create(path)?;
    writeln!(
        out,
        "variant,runs,median_score,median_auc,median_fp_ratio,median_success_rate,score_vs_baseline_pct"
    )?;
    for r in rows {
        writeln!(
            out,
            "{},{},{:.6},{:.6},{:.6},{:.6},{}",
            r.variant,
            r.runs,
            r.median_score,
            r.median_auc,
            r.median_fp_ratio,
            r.median_success_rate,
            r.score_vs_baseline_pct.map(|v| format!("{v:.2}")).unwrap_or_default()
        )?;
    }
    Ok(())
}

pub fn render_eval_table(rows: &[EvalTableRow]) -> String {
    let mut out = String::from(
        "variant              runs  score    auc      fp_ratio success  vs-baseline\n",
    );
    for r in rows {
        out.push_str(&format!(
            "{:<20} {:>4}  {:<8.4} {:<8.4} {:<8.4} {:<8.4} {}\n",
            r.variant,
            r.runs,
            r.median_score,
            r.median_auc,
            r.median_fp_ratio,
            r.median_success_rate,
            r.score_vs_baseline_pct.map(|v| format!("{v:+.1}%")).unwrap_or_else(|| "--".into())
        ));
    }
    out
}
