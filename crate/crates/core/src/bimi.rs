//! Binary mutual-information reward: conformal threshold calibration, the
//! one-time binary gate, frequency damping, and the continuous baseline
//! wrappers.
//!
//! The gate threshold `q_hat` is the lower-interpolation empirical quantile
//! of matched-pair similarity scores at level `ceil((n-1)(1-alpha)) / n`.
//! Scores at or above `q_hat` trigger a one-time +1 reward per active
//! instruction; the damped variant subtracts the instruction's empirical
//! firing frequency from the previous policy iteration and clamps at zero:
//!
//! ```text
//! r(score, k) = max(1{score >= q_hat} - p_k, 0)
//! ```
//!
//! Because `q_hat` sits high in the matched-score distribution, the gate is
//! deliberately conservative: it trades extra false negatives for a sharply
//! reduced false-positive rate.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Calibrated gate threshold. `q_hat` is always an element of the
/// calibration score multiset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConformalThreshold {
    pub q_hat: f64,
    pub alpha: f64,
    pub n: usize,
}

/// Lower-interpolation empirical quantile at level
/// `ceil((n-1)(1-alpha)) / n`: sort the scores and take the element at index
/// `floor(q_level * (n-1))`, the largest index not exceeding the fractional
/// position.
pub fn calibrate_threshold(scores: &[f64], alpha: f64) -> Result<ConformalThreshold> {
    if scores.is_empty() {
        return Err(Error::Usage("calibration requires at least one score".into()));
    }
    if !(0.0 < alpha && alpha < 1.0) {
        return Err(Error::Config(format!("alpha must be in (0,1), got {alpha}")));
    }
    let n = scores.len();
    let mut sorted = scores.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("calibration scores must not be NaN"));
    let q_level = ((n as f64 - 1.0) * (1.0 - alpha)).ceil() / n as f64;
    let idx = (q_level * (n as f64 - 1.0)).floor() as usize;
    Ok(ConformalThreshold { q_hat: sorted[idx.min(n - 1)], alpha, n })
}

/// One-time binary gate: 1 iff the score clears the threshold and the gate
/// has not already fired for the active instruction.
pub fn binary_reward(score: f64, thr: &ConformalThreshold, fired: bool) -> f64 {
    if !fired && score >= thr.q_hat {
        1.0
    } else {
        0.0
    }
}

/// Frequency-damped binary reward: `max(gate - p_lk, 0)`, non-increasing in
/// `p_lk` and always within [0, 1].
pub fn bimi_reward(score: f64, thr: &ConformalThreshold, p_lk: f64, fired: bool) -> f64 {
    debug_assert!((0.0..=1.0).contains(&p_lk));
    (binary_reward(score, thr, fired) - p_lk).max(0.0)
}

/// Continuous baseline: pass the raw score through until the per-instruction
/// cumulative total has reached the cap, then 0.
pub fn continuous_reward(score: f64, cumulative: f64, cap: f64) -> f64 {
    if cumulative < cap {
        score
    } else {
        0.0
    }
}

/// Combined per-step reward: `r_e + (1 - beta) * gamma * r_v`.
pub fn combine_rewards(r_e: f64, r_v: f64, beta: f64, gamma: f64) -> f64 {
    r_e + (1.0 - beta) * gamma * r_v
}

/// Empirical firing frequency of one instruction over the previous policy
/// iteration's rollouts: the mean over rollouts of (steps at or above
/// `q_hat`) / (rollout length). An empty rollout set yields `initial`.
pub fn estimate_frequency(rollouts: &[Vec<f64>], thr: &ConformalThreshold, initial: f64) -> f64 {
    if rollouts.is_empty() {
        return initial;
    }
    let mut total = 0.0;
    for scores in rollouts {
        assert!(!scores.is_empty(), "rollouts must have length >= 1");
        let hits = scores.iter().filter(|&&s| s >= thr.q_hat).count();
        total += hits as f64 / scores.len() as f64;
    }
    total / rollouts.len() as f64
}

/// Per-instruction firing frequencies, one entry per instruction index,
/// refreshed once per policy iteration from the previous iteration's
/// rollouts (never mid-episode).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyTable {
    /// p\[k-1\] is the empirical frequency of instruction k.
    pub p: Vec<f64>,
    /// Policy iteration the table was computed from.
    pub iteration: u64,
}

impl FrequencyTable {
    /// First iteration has no previous rollouts; frequencies start at 0 so
    /// the first gate firing pays in full.
    pub fn initial(n_instructions: usize) -> Self {
        Self { p: vec![0.0; n_instructions], iteration: 0 }
    }

    pub fn get(&self, instruction: usize) -> f64 {
        self.p.get(instruction - 1).copied().unwrap_or(0.0)
    }

    /// Rebuild from the previous iteration's per-instruction score streams.
    pub fn update(&mut self, per_instruction: &[Vec<Vec<f64>>], thr: &ConformalThreshold, iteration: u64) {
        for (k, rollouts) in per_instruction.iter().enumerate() {
            if k < self.p.len() {
                self.p[k] = estimate_frequency(rollouts, thr, self.p[k]);
            }
        }
        self.iteration = iteration;
    }
}

/// Reward pipeline mode selecting how the similarity score becomes reward.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PipelineMode {
    /// Current-step events only, raw score, cumulative cap.
    ContinuousMarkovian,
    /// Last-W-events window, raw score, cumulative cap.
    ContinuousWindow,
    /// One-time binary gate on the window score.
    Bi,
    /// One-time binary gate with frequency damping.
    Bimi,
}

impl PipelineMode {
    pub fn name(&self) -> &'static str {
        match self {
            PipelineMode::ContinuousMarkovian => "continuous_markovian",
            PipelineMode::ContinuousWindow => "continuous_window",
            PipelineMode::Bi => "bi",
            PipelineMode::Bimi => "bimi",
        }
    }

    pub fn needs_threshold(&self) -> bool {
        matches!(self, PipelineMode::Bi | PipelineMode::Bimi)
    }
}

/// Static configuration of the similarity-reward pipeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardPipelineConfig {
    pub mode: PipelineMode,
    /// Shaping mix: beta = 1 disables similarity shaping entirely.
    pub beta: f64,
    pub gamma: f64,
    /// Per-instruction cumulative reward cap for the continuous modes.
    pub cap: f64,
    /// Trajectory memory window W.
    pub window: usize,
}

impl RewardPipelineConfig {
    pub fn new(mode: PipelineMode) -> Self {
        Self { mode, beta: 0.5, gamma: 0.95, cap: 2.0, window: 10 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.beta) {
            return Err(Error::Config(format!("beta must be in [0,1], got {}", self.beta)));
        }
        if !(0.0 < self.gamma && self.gamma < 1.0) {
            return Err(Error::Config(format!("gamma must be in (0,1), got {}", self.gamma)));
        }
        if self.cap <= 0.0 {
            return Err(Error::Config(format!("cap must be positive, got {}", self.cap)));
        }
        if self.window == 0 {
            return Err(Error::Config("window must be >= 1".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn quantile_worked_examples() {
        let scores: Vec<f64> = (0..10).map(|i| 0.50 + 0.05 * i as f64).collect();
        let thr = calibrate_threshold(&scores, 0.1).unwrap();
        assert_eq!(thr.q_hat, 0.90);
        assert_eq!(thr.n, 10);

        let thr = calibrate_threshold(&[0.7], 0.1).unwrap();
        assert_eq!(thr.q_hat, 0.7);

        let thr = calibrate_threshold(&[0.5; 8], 0.2).unwrap();
        assert_eq!(thr.q_hat, 0.5);

        assert!(calibrate_threshold(&[], 0.1).is_err());
        assert!(calibrate_threshold(&[0.5], 0.0).is_err());
    }

    #[test]
    fn gate_is_one_time() {
        let thr = ConformalThreshold { q_hat: 0.9, alpha: 0.1, n: 10 };
        assert_eq!(binary_reward(0.95, &thr, false), 1.0);
        assert_eq!(binary_reward(0.95, &thr, true), 0.0);
        assert_eq!(binary_reward(0.85, &thr, false), 0.0);
        // boundary: score equal to the threshold fires
        assert_eq!(binary_reward(0.9, &thr, false), 1.0);
    }

    #[test]
    fn damped_reward_examples() {
        let thr = ConformalThreshold { q_hat: 0.9, alpha: 0.1, n: 10 };
        assert!((bimi_reward(0.95, &thr, 0.3, false) - 0.7).abs() < 1e-15);
        assert_eq!(bimi_reward(0.95, &thr, 1.0, false), 0.0);
        assert_eq!(bimi_reward(0.5, &thr, 0.3, false), 0.0);
    }

    #[test]
    fn continuous_cap() {
        assert_eq!(continuous_reward(0.6, 0.0, 2.0), 0.6);
        assert_eq!(continuous_reward(0.6, 2.0, 2.0), 0.0);
        assert_eq!(continuous_reward(0.0, 0.0, 2.0), 0.0);
    }

    #[test]
    fn combine_worked_examples() {
        assert!((combine_rewards(1.0, 0.5, 0.5, 0.95) - 1.2375).abs() < 1e-12);
        assert_eq!(combine_rewards(0.7, 123.0, 1.0, 0.95), 0.7);
        assert!((combine_rewards(0.0, 1.0, 0.0, 0.95) - 0.95).abs() < 1e-15);
    }

    #[test]
    fn frequency_estimation() {
        let thr = ConformalThreshold { q_hat: 0.5, alpha: 0.1, n: 4 };
        let one = vec![vec![0.6, 0.1, 0.7, 0.2, 0.9, 0.0, 0.0, 0.0, 0.0, 0.0]];
        assert!((estimate_frequency(&one, &thr, 0.0) - 0.3).abs() < 1e-15);
        let two = vec![
            vec![0.6; 3].into_iter().chain(vec![0.0; 7]).collect::<Vec<_>>(),
            vec![0.9].into_iter().chain(vec![0.0; 19]).collect::<Vec<_>>(),
        ];
        assert!((estimate_frequency(&two, &thr, 0.0) - 0.175).abs() < 1e-15);
        assert_eq!(estimate_frequency(&[], &thr, 0.25), 0.25);
        assert_eq!(estimate_frequency(&[vec![0.1, 0.2]], &thr, 0.0), 0.0);
    }

    proptest! {
        /// The implementation matches an independently coded sort-and-index
        /// oracle exactly.
        #[test]
        fn quantile_matches_independent_oracle(
            scores in proptest::collection::vec(0.0f64..1.0, 1..200),
            alpha in prop_oneof![Just(0.05), Just(0.1), Just(0.2), Just(0.5)],
        ) {
            let thr = calibrate_threshold(&scores, alpha).unwrap();
            // oracle: sort ascending, q_level = ceil((n-1)(1-a))/n, pick
            // floor(q_level*(n-1)) by linear scan instead of indexing
            let mut sorted = scores.clone();
            sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let n = sorted.len() as f64;
            let q_level = ((n - 1.0) * (1.0 - alpha)).ceil() / n;
            let target = (q_level * (n - 1.0)).floor() as usize;
            let mut expected = sorted[0];
            for (i, s) in sorted.iter().enumerate() {
                if i <= target {
                    expected = *s;
                }
            }
            prop_assert_eq!(thr.q_hat, expected);
        }

        /// Eq-bounds: the damped reward always lands in [0, 1] and is
        /// non-increasing in p.
        #[test]
        fn bimi_bounds_and_monotonicity(
            score in 0.0f64..1.0,
            q in 0.0f64..1.0,
            p1 in 0.0f64..1.0,
            p2 in 0.0f64..1.0,
            fired in any::<bool>(),
        ) {
            let thr = ConformalThreshold { q_hat: q, alpha: 0.1, n: 1 };
            let r1 = bimi_reward(score, &thr, p1, fired);
            prop_assert!((0.0..=1.0).contains(&r1));
            let (lo, hi) = if p1 <= p2 { (p1, p2) } else { (p2, p1) };
            prop_assert!(bimi_reward(score, &thr, lo, fired) >= bimi_reward(score, &thr, hi, fired));
        }
    }
}
