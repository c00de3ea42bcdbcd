//! Rollout storage and generalized advantage estimation.

use serde::{Deserialize, Serialize};

/// One stored transition. Rewards are logged per source so the combined
/// value can always be re-derived.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub obs: Vec<f64>,
    pub action: usize,
    pub log_prob: f64,
    pub value: f64,
    pub r_e: f64,
    pub r_v: f64,
    pub r_i: f64,
    /// Combined reward the learner sees.
    pub r_t: f64,
    pub done: bool,
    pub pointer: usize,
}

/// Fixed-capacity `nproc x nstep` rollout buffer.
#[derive(Debug, Clone, Default)]
pub struct RolloutBuffer {
    /// `streams[env][step]`
    pub streams: Vec<Vec<Transition>>,
    /// Bootstrap value of the state following each stream's last step.
    pub last_values: Vec<f64>,
    pub advantages: Vec<Vec<f64>>,
    pub returns: Vec<Vec<f64>>,
}

impl RolloutBuffer {
    pub fn new(nproc: usize) -> Self {
        Self {
            streams: vec![Vec::new(); nproc],
            last_values: vec![0.0; nproc],
            advantages: Vec::new(),
            returns: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.streams.iter().map(|s| s.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Flattened (env, step) indices in a fixed order.
    pub fn flat_indices(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.len());
        for (e, s) in self.streams.iter().enumerate() {
            for t in 0..s.len() {
                out.push((e, t));
            }
        }
        out
    }
}

/// Generalized advantage estimation over each env stream:
/// `delta_t = r_t + gamma V_{t+1} (1 - done_t) - V_t`,
/// `A_t = delta_t + gamma lambda (1 - done_t) A_{t+1}`,
/// with the stream's bootstrap value closing the recursion. Returns are
/// `A + V`. When `normalize` is set, advantages (not returns) are shifted
/// and scaled to zero mean and unit variance across the whole buffer.
pub fn compute_gae(buffer: &mut RolloutBuffer, gamma: f64, lambda: f64, normalize: bool) {
    buffer.advantages.clear();
    buffer.returns.clear();
    for (e, stream) in buffer.streams.iter().enumerate() {
        let n = stream.len();
        let mut adv = vec![0.0; n];
        let mut next_adv = 0.0;
        let mut next_value = buffer.last_values[e];
        for t in (0..n).rev() {
            let tr = &stream[t];
            let cont = if tr.done { 0.0 } else { 1.0 };
            let delta = tr.r_t + gamma * next_value * cont - tr.value;
            next_adv = delta + gamma * lambda * cont * next_adv;
            adv[t] = next_adv;
            next_value = tr.value;
        }
        let ret: Vec<f64> = adv.iter().zip(stream).map(|(a, tr)| a + tr.value).collect();
        buffer.advantages.push(adv);
        buffer.returns.push(ret);
    }
    if normalize {
        let n = buffer.len();
        if n > 1 {
            let mean: f64 =
                buffer.advantages.iter().flatten().sum::<f64>() / n as f64;
            let var: f64 = buffer
                .advantages
                .iter()
                .flatten()
                .map(|a| (a - mean) * (a - mean))
                .sum::<f64>()
                / n as f64;
            let std = var.sqrt().max(1e-8);
            for stream in &mut buffer.advantages {
                for a in stream {
                    *a = (*a - mean) / std;
                }
            }
        }
    }
}
