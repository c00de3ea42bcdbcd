//! Clipped-surrogate policy update.

use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::agent::buffer::RolloutBuffer;
use crate::agent::policy::{Adam, Gradients, PolicyModel};
use crate::agent::TrainConfig;
use crate::error::{Error, Result};

/// Mean losses over one update phase, for logging.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct LossStats {
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub clip_fraction: f64,
}

/// Run `cfg.ppo_epochs` passes of minibatched clipped-surrogate updates over
/// the buffer. Advantages must already be computed.
pub fn ppo_update(
    policy: &mut PolicyModel,
    adam: &mut Adam,
    buffer: &RolloutBuffer,
    cfg: &TrainConfig,
    rng: &mut ChaCha8Rng,
) -> Result<LossStats> {
    assert_eq!(
        buffer.advantages.iter().map(|a| a.len()).sum::<usize>(),
        buffer.len(),
        "advantages must be computed before the update"
    );
    let mut indices = buffer.flat_indices();
    let mut stats = LossStats::default();
    let mut batches = 0usize;

    for _ in 0..cfg.ppo_epochs {
        indices.shuffle(rng);
        let chunk = indices.len().div_ceil(cfg.minibatches).max(1);
        for batch in indices.chunks(chunk) {
            let mut grads = Gradients::zeros(policy);
            let mut batch_pi = 0.0;
            let mut batch_v = 0.0;
            let mut batch_ent = 0.0;
            let mut clipped = 0usize;
            for &(e, t) in batch {
                let tr = &buffer.streams[e][t];
                let adv = buffer.advantages[e][t];
                let ret = buffer.returns[e][t];
                let cache = policy.forward(&tr.obs);
                let logp = cache.probs[tr.action].max(1e-30).ln();
                let ratio = (logp - tr.log_prob).exp();
                let clipped_ratio = ratio.clamp(1.0 - cfg.clip, 1.0 + cfg.clip);
                let surr1 = ratio * adv;
                let surr2 = clipped_ratio * adv;
                // gradient flows through the unclipped branch only when it
                // is the active minimum
                let use_unclipped = surr1 <= surr2;
                let entropy: f64 =
                    -cache.probs.iter().map(|p| if *p > 0.0 { p * p.ln() } else { 0.0 }).sum::<f64>();

                batch_pi += -surr1.min(surr2);
                batch_v += 0.5 * (cache.value - ret) * (cache.value - ret);
                batch_ent += entropy;
                if ratio != clipped_ratio {
                    clipped += 1;
                }

                // d(-min surrogate)/dlogp = -ratio * adv on the active branch
                let dlogp = if use_unclipped { -ratio * adv } else { 0.0 };
                let mut dlogits = vec![0.0; policy.n_actions];
                for (j, p) in cache.probs.iter().enumerate() {
                    let ind = if j == tr.action { 1.0 } else { 0.0 };
                    // policy surrogate through log pi(a)
                    dlogits[j] += dlogp * (ind - p);
                    // entropy bonus: d(-c_ent * H)/dlogits_j = c_ent * p_j (ln p_j + H)
                    dlogits[j] += cfg.entropy_coef * p * (p.max(1e-30).ln() + entropy);
                }
                let dvalue = cfg.value_coef * (cache.value - ret);
                grads.accumulate(policy, &cache, &dlogits, dvalue);
            }
            let n = batch.len() as f64;
            let (pi_l, v_l, ent) =
                (batch_pi / n, cfg.value_coef * batch_v / n, batch_ent / n);
            if !(pi_l.is_finite() && v_l.is_finite() && ent.is_finite()) {
                return Err(Error::Training(format!(
                    "non-finite loss: policy={pi_l} value={v_l} entropy={ent} after {batches} batches"
                )));
            }
            grads.finalize(cfg.max_grad_norm);
            adam.step(policy, &grads);
            stats.policy_loss += pi_l;
            stats.value_loss += v_l;
            stats.entropy += ent;
            stats.clip_fraction += clipped as f64 / n;
            batches += 1;
        }
    }
    if batches > 0 {
        let b = batches as f64;
        stats.policy_loss /= b;
        stats.value_loss /= b;
        stats.entropy /= b;
        stats.clip_fraction /= b;
    }
    Ok(stats)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agent::buffer::{compute_gae, Transition};
    use rand::Rng;
    use rand_chacha::rand_core::SeedableRng;

    fn bandit_config() -> TrainConfig {
        TrainConfig {
            gamma: 0.95,
            gae_lambda: 0.65,
            clip: 0.2,
            entropy_coef: 0.0,
            value_coef: 0.5,
            learning_rate: 5e-3,
            ppo_epochs: 3,
            minibatches: 4,
            nproc: 1,
            nstep: 256,
            epochs: 50,
            intrinsic_coef: 0.0,
            normalize_advantage: true,
            max_grad_norm: 0.5,
            hidden: 16,
            eval_every: 10,
            eval_episodes: 10,
        }
    }

    /// Two-armed bandit oracle: arm 0 pays 1, arm 1 pays 0. The probability
    /// of the rewarded arm must rise monotonically (small tolerance for
    /// sampling noise) and end high.
    #[test]
    fn bandit_improvement() {
        let cfg = bandit_config();
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let mut policy = PolicyModel::new(&mut rng, 1, cfg.hidden, 2);
        let mut adam = Adam::new(&policy, cfg.learning_rate);
        let obs = vec![1.0];
        let mut prev = 0.0;
        let mut history = Vec::new();
        for update in 0..50 {
            let mut buf = RolloutBuffer::new(1);
            for _ in 0..cfg.nstep {
                let (action, log_prob, value) = policy.sample(&obs, &mut rng);
                let r = if action == 0 { 1.0 } else { 0.0 };
                buf.streams[0].push(Transition {
                    obs: obs.clone(),
                    action,
                    log_prob,
                    value,
                    r_e: r,
                    r_v: 0.0,
                    r_i: 0.0,
                    r_t: r,
                    done: true,
                    pointer: 1,
                });
            }
            compute_gae(&mut buf, cfg.gamma, cfg.gae_lambda, cfg.normalize_advantage);
            ppo_update(&mut policy, &mut adam, &buf, &cfg, &mut rng).unwrap();
            let p0 = policy.forward(&obs).probs[0];
            history.push(p0);
            assert!(
                p0 >= prev - 0.02,
                "greedy-arm probability regressed at update {update}: {history:?}"
            );
            prev = prev.max(p0);
        }
        assert!(prev > 0.9, "bandit did not converge: {history:?}");
    }

    #[test]
    fn clip_bounds_the_ratio_effect() {
        // with zero advantages the surrogate gradient vanishes; with the
        // value head targeted at the recorded values and entropy off, the
        // update leaves parameters essentially unchanged
        let cfg = TrainConfig { entropy_coef: 0.0, ..bandit_config() };
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut policy = PolicyModel::new(&mut rng, 2, 8, 3);
        let before = policy.clone();
        let mut adam = Adam::new(&policy, cfg.learning_rate);
        let mut buf = RolloutBuffer::new(1);
        for _ in 0..32 {
            let obs = vec![rng.gen::<f64>(), rng.gen::<f64>()];
            let cache = policy.forward(&obs);
            let action = 0;
            buf.streams[0].push(Transition {
                obs,
                action,
                log_prob: cache.probs[action].ln(),
                value: cache.value,
                r_e: 0.0,
                r_v: 0.0,
                r_i: 0.0,
                r_t: 0.0,
                done: true,
                pointer: 1,
            });
        }
        // hand-zeroed advantages, returns equal to recorded values
        buf.advantages = vec![vec![0.0; 32]];
        buf.returns = vec![buf.streams[0].iter().map(|t| t.value).collect()];
        let stats = ppo_update(&mut policy, &mut adam, &buf, &cfg, &mut rng).unwrap();
        assert!(stats.policy_loss.abs() < 1e-12);
        assert!(stats.value_loss < 1e-10);
        // parameters moved by at most optimizer noise on a zero gradient
        let moved = policy
            .forward(&vec![0.5, 0.5])
            .probs
            .iter()
            .zip(before.forward(&vec![0.5, 0.5]).probs.iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        assert!(moved < 1e-6, "policy drifted {moved} with zero advantages");
    }

    #[test]
    fn non_finite_loss_is_a_training_error() {
        let cfg = bandit_config();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut policy = PolicyModel::new(&mut rng, 1, 8, 2);
        let mut adam = Adam::new(&policy, cfg.learning_rate);
        let mut buf = RolloutBuffer::new(1);
        let cache = policy.forward(&[1.0]);
        buf.streams[0].push(Transition {
            obs: vec![1.0],
            action: 0,
            log_prob: cache.probs[0].ln(),
            value: cache.value,
            r_e: f64::NAN,
            r_v: 0.0,
            r_i: 0.0,
            r_t: f64::NAN,
            done: true,
            pointer: 1,
        });
        buf.advantages = vec![vec![f64::NAN]];
        buf.returns = vec![vec![f64::NAN]];
        let err = ppo_update(&mut policy, &mut adam, &buf, &cfg, &mut rng);
        assert!(matches!(err, Err(Error::Training(_))));
    }
}
