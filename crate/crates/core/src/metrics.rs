//! Evaluation metrics and post-hoc run diagnostics.
//!
//! The headline number is the geometric score
//! `exp(mean(ln(1 + s_k))) - 1` over per-instruction success rates; it
//! equals `s` exactly when all rates are `s` and punishes uneven progress.
//! The diagnostic side pairs every auxiliary reward emission with the
//! episode's ground-truth fulfillment time: a positive offset means the
//! reward came before the goal (a false positive), a missing fulfillment
//! with a reward is also a false positive, and a fulfillment with no reward
//! is a false negative.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::record::{RewardSource, RunRecord};

/// Geometric aggregation of per-instruction success rates.
pub fn score_metric(success_rates: &[f64]) -> Result<f64> {
    if success_rates.is_empty() {
        return Err(Error::Usage("score metric needs at least one success rate".into()));
    }
    for &s in success_rates {
        if !(0.0..=1.0).contains(&s) {
            return Err(Error::Usage(format!("success rate {s} outside [0,1]")));
        }
    }
    let mean_log =
        success_rates.iter().map(|s| (1.0 + s).ln()).sum::<f64>() / success_rates.len() as f64;
    Ok(mean_log.exp() - 1.0)
}

/// Normalized area under the reward curve: trapezoidal integral of the mean
/// extrinsic return over the epoch axis rescaled to [0, 1], divided by the
/// maximum achievable return of 1.
pub fn auc_total_reward(series: &[(f64, f64)]) -> Result<f64> {
    if series.len() < 2 {
        return Err(Error::Usage("AUC needs at least two evaluation points".into()));
    }
    let first = series.first().unwrap().0;
    let last = series.last().unwrap().0;
    if last <= first {
        return Err(Error::Usage("evaluation epochs must be increasing".into()));
    }
    let span = last - first;
    let mut area = 0.0;
    for pair in series.windows(2) {
        let (x0, y0) = pair[0];
        let (x1, y1) = pair[1];
        if x1 < x0 {
            return Err(Error::Usage("evaluation epochs must be increasing".into()));
        }
        area += (x1 - x0) / span * 0.5 * (y0 + y1);
    }
    Ok(area)
}

/// Per-cell reward aggregation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Heatmap {
    pub width: i32,
    pub height: i32,
    /// cell -> (total reward, emission count)
    pub cells: BTreeMap<(i32, i32), (f64, u64)>,
}

impl Heatmap {
    pub fn total(&self) -> f64 {
        self.cells.values().map(|(v, _)| v).sum()
    }

    /// Dense-grid CSV of totals: one row per y, `width` comma-separated
    /// columns.
    pub fn write_dense_csv(&self, path: &Path) -> Result<()> {
        let mut out = fs::File::create(path)?;
        for y in 0..self.height {
            let row: Vec<String> = (0..self.width)
                .map(|x| format!("{:.6}", self.cells.get(&(x, y)).map(|(v, _)| *v).unwrap_or(0.0)))
                .collect();
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }
}

/// Aggregate reward emissions by cell, optionally restricted to one source.
pub fn reward_heatmap(record: &RunRecord, source: Option<RewardSource>) -> Heatmap {
    let mut cells: BTreeMap<(i32, i32), (f64, u64)> = BTreeMap::new();
    for ev in &record.reward_events {
        if let Some(s) = source {
            if ev.source != s {
                continue;
            }
        }
        let e = cells.entry(ev.cell).or_insert((0.0, 0));
        e.0 += ev.value;
        e.1 += 1;
    }
    Heatmap { width: record.grid_size.0, height: record.grid_size.1, cells }
}

/// One reward-to-goal pairing. Positive offset: reward before the goal
/// (false positive). A reward with no eventual fulfillment has `t_goal`
/// None. False negatives are recorded with `t_reward` None.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OffsetRecord {
    pub episode: u64,
    pub instruction: usize,
    pub t_reward: Option<usize>,
    pub t_goal: Option<usize>,
    /// `t_goal - t_reward` when both exist.
    pub offset: Option<i64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct OffsetSummary {
    pub false_positives: usize,
    pub false_negatives: usize,
    pub exact: usize,
    pub late: usize,
}

/// Pair every similarity-reward emission with the episode's ground-truth
/// fulfillment time for the instruction the pointer was on, and record
/// fulfillments that never saw a reward as false negatives.
pub fn offset_histogram(record: &RunRecord) -> (Vec<OffsetRecord>, OffsetSummary) {
    let episodes: BTreeMap<u64, &crate::record::EpisodeSummary> =
        record.episodes.iter().map(|e| (e.episode, e)).collect();
    let mut records = Vec::new();
    let mut summary = OffsetSummary::default();
    let mut rewarded: BTreeMap<(u64, usize), bool> = BTreeMap::new();

    for ev in &record.reward_events {
        if ev.source != RewardSource::Similarity || ev.value <= 0.0 {
            continue;
        }
        let Some(ep) = episodes.get(&ev.episode) else { continue };
        let instruction = ev.pointer.min(ep.fulfill_times.len().max(1));
        rewarded.insert((ev.episode, instruction), true);
        let t_goal = ep.fulfill_times.get(instruction - 1).copied().flatten();
        let offset = t_goal.map(|g| g as i64 - ev.t as i64);
        match offset {
            Some(o) if o > 0 => summary.false_positives += 1,
            Some(0) => summary.exact += 1,
            Some(_) => summary.late += 1,
            None => summary.false_positives += 1,
        }
        records.push(OffsetRecord {
            episode: ev.episode,
            instruction,
            t_reward: Some(ev.t),
            t_goal,
            offset,
        });
    }

    for ep in &record.episodes {
        for (i, t_goal) in ep.fulfill_times.iter().enumerate() {
            if let Some(g) = t_goal {
                if !rewarded.contains_key(&(ep.episode, i + 1)) {
                    summary.false_negatives += 1;
                    records.push(OffsetRecord {
                        episode: ep.episode,
                        instruction: i + 1,
                        t_reward: None,
                        t_goal: Some(*g),
                        offset: None,
                    });
                }
            }
        }
    }

    (records, summary)
}

/// Fraction of similarity-reward emissions that were false positives:
/// emitted before fulfillment, or with no fulfillment at all. 0 when the
/// run emitted nothing.
pub fn fp_ratio(record: &RunRecord) -> f64 {
    let (records, summary) = offset_histogram(record);
    let emissions = records.iter().filter(|r| r.t_reward.is_some()).count();
    if emissions == 0 {
        return 0.0;
    }
    summary.false_positives as f64 / emissions as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::record::{EpisodeSummary, RewardEvent};

    #[test]
    fn score_metric_closed_forms() {
        assert!((score_metric(&[1.0, 1.0, 1.0]).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(score_metric(&[0.0, 0.0]).unwrap(), 0.0);
        let expect = 2.0_f64.sqrt() - 1.0;
        assert!((score_metric(&[1.0, 0.0]).unwrap() - expect).abs() < 1e-12);
        assert!(score_metric(&[]).is_err());
        assert!(score_metric(&[1.5]).is_err());
    }

    #[test]
    fn score_metric_equals_common_rate() {
        // exp/ln cancel exactly when every rate is the same
        for s in [0.0, 0.25, 0.5, 0.99, 1.0] {
            let v = score_metric(&[s; 4]).unwrap();
            assert!((v - s).abs() < 1e-12);
        }
    }

    #[test]
    fn auc_closed_forms() {
        let flat: Vec<(f64, f64)> = (0..5).map(|i| (i as f64, 1.0)).collect();
        assert!((auc_total_reward(&flat).unwrap() - 1.0).abs() < 1e-12);
        let zero: Vec<(f64, f64)> = (0..5).map(|i| (i as f64, 0.0)).collect();
        assert_eq!(auc_total_reward(&zero).unwrap(), 0.0);
        let ramp = vec![(0.0, 0.0), (10.0, 1.0)];
        assert!((auc_total_reward(&ramp).unwrap() - 0.5).abs() < 1e-12);
        assert!(auc_total_reward(&[(0.0, 1.0)]).is_err());
    }

    fn record_with(events: Vec<RewardEvent>, episodes: Vec<EpisodeSummary>) -> RunRecord {
        RunRecord {
            manifest: serde_json::json!({}),
            grid_size: (4, 3),
            n_instructions: 1,
            metrics: vec![],
            evals: vec![],
            reward_events: events,
            episodes,
            policy: serde_json::json!(null),
        }
    }

    fn sim_event(episode: u64, t: usize, cell: (i32, i32), value: f64) -> RewardEvent {
        RewardEvent {
            epoch: 0,
            env: 0,
            episode,
            t,
            cell,
            source: RewardSource::Similarity,
            value,
            pointer: 1,
        }
    }

    #[test]
    fn heatmap_conserves_logged_reward() {
        let rec = record_with(
            vec![sim_event(1, 1, (0, 0), 0.5), sim_event(1, 2, (0, 0), 0.25), sim_event(1, 3, (1, 2), 1.0)],
            vec![],
        );
        let map = reward_heatmap(&rec, Some(RewardSource::Similarity));
        assert!((map.total() - 1.75).abs() < 1e-12);
        assert_eq!(map.cells.get(&(0, 0)).unwrap().1, 2);
        let empty = record_with(vec![], vec![]);
        assert_eq!(reward_heatmap(&empty, None).total(), 0.0);
    }

    #[test]
    fn offsets_and_fp_ratio() {
        let ep = EpisodeSummary {
            episode: 1,
            env: 0,
            length: 10,
            fulfill_times: vec![Some(8)],
            success: true,
            failed: false,
        };
        // reward at t=5 before fulfillment at t=8: offset +3, a false positive
        let rec = record_with(vec![sim_event(1, 5, (0, 0), 1.0)], vec![ep.clone()]);
        let (records, summary) = offset_histogram(&rec);
        assert_eq!(records[0].offset, Some(3));
        assert_eq!(summary.false_positives, 1);
        assert_eq!(fp_ratio(&rec), 1.0);

        // reward exactly at the fulfillment step
        let rec = record_with(vec![sim_event(1, 8, (0, 0), 1.0)], vec![ep.clone()]);
        let (records, summary) = offset_histogram(&rec);
        assert_eq!(records[0].offset, Some(0));
        assert_eq!(summary.exact, 1);
        assert_eq!(fp_ratio(&rec), 0.0);

        // fulfillment with no reward: a false negative entry
        let rec = record_with(vec![], vec![ep]);
        let (records, summary) = offset_histogram(&rec);
        assert_eq!(summary.false_negatives, 1);
        assert_eq!(records[0].t_reward, None);
        assert_eq!(fp_ratio(&rec), 0.0);

        // 2 false positives out of 8 emissions
        let ep2 = EpisodeSummary {
            episode: 2,
            env: 0,
            length: 20,
            fulfill_times: vec![Some(10)],
            success: true,
            failed: false,
        };
        let mut events: Vec<RewardEvent> = (0..6).map(|i| sim_event(2, 10 + i, (0, 0), 0.5)).collect();
        events.push(sim_event(2, 3, (1, 0), 0.5));
        events.push(sim_event(2, 4, (1, 0), 0.5));
        let rec = record_with(events, vec![ep2]);
        assert!((fp_ratio(&rec) - 0.25).abs() < 1e-12);
    }
}
