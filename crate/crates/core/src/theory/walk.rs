//! Monte Carlo verification of the random-walk convergence laws.
//!
//! Unit steps are uniform on the (d-1)-sphere (normalized standard Gaussian
//! vectors; d = 1 special-cases to Rademacher +-1 steps). Two laws are
//! checked: the mean squared displacement identity `E[|S_T|^2] = T`, and the
//! quadratic first-passage scaling `E[T_D] ~ D^2` together with the
//! even-split sub-task bound
//! `E[T_D]/(n-1) <= sum_i E[T_{d_i}] < E[T_D]`.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

/// Monte Carlo estimate of the mean squared displacement after `steps`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct MsdEstimate {
    pub dim: usize,
    pub steps: usize,
    pub trials: usize,
    pub mean: f64,
    pub std_error: f64,
}

fn unit_step(rng: &mut ChaCha8Rng, dim: usize, out: &mut [f64]) {
    if dim == 1 {
        out[0] = if rng.gen::<bool>() { 1.0 } else { -1.0 };
        return;
    }
    loop {
        let mut norm2 = 0.0;
        for x in out.iter_mut() {
            let g: f64 = rng.sample(StandardNormal);
            *x = g;
            norm2 += g * g;
        }
        if norm2 > 1e-12 {
            let inv = norm2.sqrt().recip();
            out.iter_mut().for_each(|x| *x *= inv);
            return;
        }
    }
}

/// Estimate `E[|S_T|^2]` for a `dim`-dimensional unit-step random walk.
pub fn random_walk_msd(dim: usize, steps: usize, trials: usize, seed: u64) -> MsdEstimate {
    assert!(dim >= 1 && trials >= 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut step = vec![0.0; dim];
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for _ in 0..trials {
        let mut pos = vec![0.0; dim];
        for _ in 0..steps {
            unit_step(&mut rng, dim, &mut step);
            for (p, s) in pos.iter_mut().zip(&step) {
                *p += s;
            }
        }
        let d2: f64 = pos.iter().map(|p| p * p).sum();
        sum += d2;
        sum_sq += d2 * d2;
    }
    let mean = sum / trials as f64;
    let var = (sum_sq / trials as f64 - mean * mean).max(0.0);
    MsdEstimate { dim, steps, trials, mean, std_error: (var / trials as f64).sqrt() }
}

/// Exact `E[|S_T|^2]` for the 1-dimensional Rademacher walk by enumerating
/// all 2^T sign paths. Enumeration is capped at T = 24.
pub fn random_walk_msd_exact_1d(steps: usize) -> f64 {
    assert!(steps <= 24, "exact enumeration is limited to T <= 24");
    let paths = 1u64 << steps;
    let mut total = 0.0;
    for bits in 0..paths {
        let ups = bits.count_ones() as i64;
        let pos = 2 * ups - steps as i64;
        total += (pos * pos) as f64;
    }
    total / paths as f64
}

/// First-passage statistics for one target distance.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct FirstPassageStats {
    pub distance: f64,
    pub trials: usize,
    /// Mean steps until |S_t| first reaches the distance; censored trials
    /// contribute the step cap.
    pub mean: f64,
    pub std_error: f64,
    /// Trials that exhausted the step budget before passage.
    pub censored: usize,
}

impl FirstPassageStats {
    /// Half-width of the 95% normal confidence interval.
    pub fn ci95(&self) -> f64 {
        1.96 * self.std_error
    }
}

/// Mean first-passage step counts for each distance: the first step at which
/// the walk's displacement reaches the distance. Each trial is budgeted
/// `max_steps` steps and reported as censored if the budget runs out.
pub fn first_passage_experiment(
    dim: usize,
    distances: &[f64],
    trials: usize,
    seed: u64,
    max_steps: usize,
) -> Vec<FirstPassageStats> {
    assert!(trials >= 1);
    distances
        .iter()
        .enumerate()
        .map(|(i, &distance)| {
            assert!(distance > 0.0);
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(i as u64));
            let mut step = vec![0.0; dim];
            let target2 = distance * distance;
            let mut sum = 0.0;
            let mut sum_sq = 0.0;
            let mut censored = 0;
            for _ in 0..trials {
                let mut pos = vec![0.0; dim];
                let mut t = 0usize;
                let passage = loop {
                    if t == max_steps {
                        censored += 1;
                        break max_steps;
                    }
                    unit_step(&mut rng, dim, &mut step);
                    for (p, s) in pos.iter_mut().zip(&step) {
                        *p += s;
                    }
                    t += 1;
                    if pos.iter().map(|p| p * p).sum::<f64>() >= target2 {
                        break t;
                    }
                };
                sum += passage as f64;
                sum_sq += (passage * passage) as f64;
            }
            let mean = sum / trials as f64;
            let var = (sum_sq / trials as f64 - mean * mean).max(0.0);
            FirstPassageStats {
                distance,
                trials,
                mean,
                std_error: (var / trials as f64).sqrt(),
                censored,
            }
        })
        .collect()
}
