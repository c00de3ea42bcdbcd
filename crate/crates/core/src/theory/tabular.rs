//! Small explicit MDPs with exact linear-algebra solves.
//!
//! Everything here targets state spaces of a few dozen states at most, so
//! value functions and state distributions are computed in closed form with
//! LU solves rather than sampling. That turns the decomposition theorems in
//! [`super::gap`] into exact, testable identities.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Stochastic policy: `probs[s][a]` sums to 1 over actions for each state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Policy {
    pub probs: Vec<Vec<f64>>,
}

impl Policy {
    pub fn deterministic(actions: &[usize], n_actions: usize) -> Self {
        let probs = actions
            .iter()
            .map(|&a| {
                let mut row = vec![0.0; n_actions];
                row[a] = 1.0;
                row
            })
            .collect();
        Self { probs }
    }

    pub fn uniform(n_states: usize, n_actions: usize) -> Self {
        Self { probs: vec![vec![1.0 / n_actions as f64; n_actions]; n_states] }
    }

    pub fn validate(&self, n_states: usize, n_actions: usize) -> Result<()> {
        if self.probs.len() != n_states {
            return Err(Error::Config("policy has wrong number of states".into()));
        }
        for row in &self.probs {
            if row.len() != n_actions {
                return Err(Error::Config("policy has wrong number of actions".into()));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > 1e-9 || row.iter().any(|&p| p < -1e-12) {
                return Err(Error::Config("policy rows must be distributions".into()));
            }
        }
        Ok(())
    }
}

/// Explicit finite MDP. Transition rows sum to 1 within 1e-12.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TabularMdp {
    pub n_states: usize,
    pub n_actions: usize,
    /// `transition[s][a][s']`
    pub transition: Vec<Vec<Vec<f64>>>,
    /// `reward[s][a]`
    pub reward: Vec<Vec<f64>>,
    pub start: usize,
    pub gamma: f64,
    /// Optional goal set for sparse-reward constructions.
    pub goals: Option<Vec<bool>>,
}

impl TabularMdp {
    pub fn validate(&self) -> Result<()> {
        if self.n_states == 0 || self.n_actions == 0 {
            return Err(Error::Config("MDP must have states and actions".into()));
        }
        // the reshaping construction legitimately produces gamma = 0 (beta = 0)
        if !(0.0..1.0).contains(&self.gamma) {
            return Err(Error::Config(format!("gamma must be in [0,1), got {}", self.gamma)));
        }
        if self.start >= self.n_states {
            return Err(Error::Config("start state out of range".into()));
        }
        for s in 0..self.n_states {
            for a in 0..self.n_actions {
                let sum: f64 = self.transition[s][a].iter().sum();
                if (sum - 1.0).abs() > 1e-12 {
                    return Err(Error::Config(format!(
                        "transition row ({s},{a}) sums to {sum}, not 1"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Policy-averaged transition matrix, `P_pi[s][s']`.
    pub fn transition_under(&self, pi: &Policy) -> DMatrix<f64> {
        DMatrix::from_fn(self.n_states, self.n_states, |s, sp| {
            (0..self.n_actions).map(|a| pi.probs[s][a] * self.transition[s][a][sp]).sum()
        })
    }

    /// Policy-averaged reward vector, `r_pi[s]`.
    pub fn reward_under(&self, pi: &Policy) -> DVector<f64> {
        DVector::from_fn(self.n_states, |s, _| {
            (0..self.n_actions).map(|a| pi.probs[s][a] * self.reward[s][a]).sum()
        })
    }
}

/// Result of a value solve: state values plus the greedy policy they induce.
#[derive(Debug, Clone)]
pub struct ValueSolution {
    pub values: Vec<f64>,
    pub greedy: Vec<usize>,
}

fn greedy_from(mdp: &TabularMdp, values: &[f64]) -> Vec<usize> {
    (0..mdp.n_states)
        .map(|s| {
            let mut best = 0;
            let mut best_q = f64::NEG_INFINITY;
            for a in 0..mdp.n_actions {
                let q = mdp.reward[s][a]
                    + mdp.gamma
                        * mdp.transition[s][a].iter().zip(values).map(|(p, v)| p * v).sum::<f64>();
                if q > best_q + 1e-12 {
                    best_q = q;
                    best = a;
                }
            }
            best
        })
        .collect()
}

/// Value iteration to a sup-norm Bellman residual of at most `tol`, returning
/// the value estimate and its greedy policy.
pub fn value_iteration(mdp: &TabularMdp, tol: f64) -> Result<ValueSolution> {
    if tol <= 0.0 {
        return Err(Error::Config("tolerance must be positive".into()));
    }
    mdp.validate()?;
    let mut values = vec![0.0; mdp.n_states];
    loop {
        let mut next = vec![0.0; mdp.n_states];
        let mut residual: f64 = 0.0;
        for s in 0..mdp.n_states {
            let mut best = f64::NEG_INFINITY;
            for a in 0..mdp.n_actions {
                let q = mdp.reward[s][a]
                    + mdp.gamma
                        * mdp.transition[s][a].iter().zip(&values).map(|(p, v)| p * v).sum::<f64>();
                best = best.max(q);
            }
            next[s] = best;
            residual = residual.max((best - values[s]).abs());
        }
        values = next;
        if residual <= tol {
            break;
        }
    }
    let greedy = greedy_from(mdp, &values);
    Ok(ValueSolution { greedy, values })
}

/// Exact optimal values by policy iteration: greedy improvement alternating
/// with exact linear-solve evaluation until the greedy policy is stable. The
/// returned values are exact up to LU-solve precision.
pub fn optimal_values(mdp: &TabularMdp) -> Result<ValueSolution> {
    mdp.validate()?;
    // warm start cuts the improvement loop to a couple of rounds
    let mut greedy = value_iteration(mdp, 1e-9)?.greedy;
    for _ in 0..1000 {
        let pi = Policy::deterministic(&greedy, mdp.n_actions);
        let values = policy_evaluation(mdp, &pi)?;
        let improved = greedy_from(mdp, &values);
        if improved == greedy {
            return Ok(ValueSolution { greedy, values });
        }
        greedy = improved;
    }
    Err(Error::Verification("policy iteration failed to stabilize".into()))
}

/// Exact policy evaluation: solve `(I - gamma P_pi) V = r_pi`.
pub fn policy_evaluation(mdp: &TabularMdp, pi: &Policy) -> Result<Vec<f64>> {
    mdp.validate()?;
    pi.validate(mdp.n_states, mdp.n_actions)?;
    let p = mdp.transition_under(pi);
    let r = mdp.reward_under(pi);
    let system = DMatrix::identity(mdp.n_states, mdp.n_states) - p * mdp.gamma;
    let v = system
        .lu()
        .solve(&r)
        .ok_or_else(|| Error::Verification("singular policy-evaluation system".into()))?;
    Ok(v.iter().cloned().collect())
}

/// Discounted average state distribution
/// `d_pi = (1 - gamma) * sum_t gamma^t d_t`, solved in closed form as
/// `(1 - gamma) (I - gamma P_pi^T)^{-1} e_start`.
pub fn discounted_state_distribution(mdp: &TabularMdp, pi: &Policy) -> Result<Vec<f64>> {
    mdp.validate()?;
    pi.validate(mdp.n_states, mdp.n_actions)?;
    let p = mdp.transition_under(pi);
    let mut e0 = DVector::zeros(mdp.n_states);
    e0[mdp.start] = 1.0;
    let system = DMatrix::identity(mdp.n_states, mdp.n_states) - p.transpose() * mdp.gamma;
    let x = system
        .lu()
        .solve(&e0)
        .ok_or_else(|| Error::Verification("singular distribution system".into()))?;
    let d: Vec<f64> = x.iter().map(|v| v * (1.0 - mdp.gamma)).collect();
    let sum: f64 = d.iter().sum();
    debug_assert!((sum - 1.0).abs() < 1e-10, "distribution sums to {sum}");
    Ok(d)
}

/// One Bellman backup of `h`: `(B h)(s,a) = r(s,a) + gamma E[h(s')]`.
pub fn bellman_backup(mdp: &TabularMdp, h: &[f64]) -> Vec<Vec<f64>> {
    (0..mdp.n_states)
        .map(|s| {
            (0..mdp.n_actions)
                .map(|a| {
                    mdp.reward[s][a]
                        + mdp.gamma
                            * mdp.transition[s][a].iter().zip(h).map(|(p, v)| p * v).sum::<f64>()
                })
                .collect()
        })
        .collect()
}

/// States violating the pessimism condition `max_a (B h)(s,a) >= h(s)`,
/// using `tol` as slack against solver round-off.
pub fn check_pessimism(mdp: &TabularMdp, h: &[f64], tol: f64) -> Vec<usize> {
    let backup = bellman_backup(mdp, h);
    (0..mdp.n_states)
        .filter(|&s| {
            let best = backup[s].iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            best < h[s] - tol
        })
        .collect()
}

/// Random dense MDP for verification sweeps: up to `max_states` states,
/// up to `max_actions` actions, uniform rewards in [0,1], gamma in
/// [0.6, 0.95). Transition rows are renormalized to sum to 1 exactly.
pub fn random_mdp(
    rng: &mut rand_chacha::ChaCha8Rng,
    max_states: usize,
    max_actions: usize,
) -> TabularMdp {
    use rand::Rng;
    let n_states = rng.gen_range(3..=max_states.max(3));
    let n_actions = rng.gen_range(2..=max_actions.max(2));
    let transition = (0..n_states)
        .map(|_| {
            (0..n_actions)
                .map(|_| {
                    let mut row: Vec<f64> = (0..n_states).map(|_| rng.gen::<f64>() + 0.01).collect();
                    let sum: f64 = row.iter().sum();
                    row.iter_mut().for_each(|p| *p /= sum);
                    let resum: f64 = row.iter().sum();
                    row[0] += 1.0 - resum;
                    row
                })
                .collect()
        })
        .collect();
    let reward =
        (0..n_states).map(|_| (0..n_actions).map(|_| rng.gen::<f64>()).collect()).collect();
    TabularMdp {
        n_states,
        n_actions,
        transition,
        reward,
        start: 0,
        gamma: rng.gen_range(0.6..0.95),
        goals: None,
    }
}

/// Random fully-stochastic policy with every action probability at least a
/// few percent.
pub fn random_policy(
    rng: &mut rand_chacha::ChaCha8Rng,
    n_states: usize,
    n_actions: usize,
) -> Policy {
    use rand::Rng;
    let probs = (0..n_states)
        .map(|_| {
            let mut row: Vec<f64> = (0..n_actions).map(|_| rng.gen::<f64>() + 0.05).collect();
            let sum: f64 = row.iter().sum();
            row.iter_mut().for_each(|p| *p /= sum);
            let resum: f64 = row.iter().sum();
            row[0] += 1.0 - resum;
            row
        })
        .collect();
    Policy { probs }
}

/// The two-state chain used throughout the pessimism discussion: `s -> g`
/// deterministically with reward 1, `g` absorbing with reward 0.
pub fn two_state_chain(gamma: f64) -> TabularMdp {
    TabularMdp {
        n_states: 2,
        n_actions: 1,
        transition: vec![vec![vec![0.0, 1.0]], vec![vec![0.0, 1.0]]],
        reward: vec![vec![1.0], vec![0.0]],
        start: 0,
        gamma,
        goals: Some(vec![false, true]),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn value_iteration_two_state_chain() {
        // hand Bellman solve: V*(s) = 1 + 0.9 * V*(g), V*(g) = 0
        let mdp = two_state_chain(0.9);
        let sol = value_iteration(&mdp, 1e-12).unwrap();
        assert!((sol.values[0] - 1.0).abs() < 1e-9);
        assert!(sol.values[1].abs() < 1e-9);
    }

    #[test]
    fn value_iteration_zero_rewards() {
        let mut mdp = two_state_chain(0.9);
        mdp.reward = vec![vec![0.0], vec![0.0]];
        let sol = value_iteration(&mdp, 1e-12).unwrap();
        assert!(sol.values.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn self_loop_geometric_series() {
        // single absorbing state, r = 1, gamma = 0.5 -> V = 1/(1-0.5) = 2
        let mdp = TabularMdp {
            n_states: 1,
            n_actions: 1,
            transition: vec![vec![vec![1.0]]],
            reward: vec![vec![1.0]],
            start: 0,
            gamma: 0.5,
            goals: None,
        };
        let sol = value_iteration(&mdp, 1e-13).unwrap();
        assert!((sol.values[0] - 2.0).abs() < 1e-10);
        let exact = optimal_values(&mdp).unwrap();
        assert!((exact.values[0] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn policy_evaluation_matches_value_iteration_for_greedy() {
        let mdp = two_state_chain(0.9);
        let pi = Policy::deterministic(&[0, 0], 1);
        let v = policy_evaluation(&mdp, &pi).unwrap();
        assert!((v[0] - 1.0).abs() < 1e-12);
        assert!(v[1].abs() < 1e-12);
    }

    #[test]
    fn distribution_absorbing_start() {
        let mdp = TabularMdp {
            n_states: 2,
            n_actions: 1,
            transition: vec![vec![vec![1.0, 0.0]], vec![vec![0.0, 1.0]]],
            reward: vec![vec![0.0], vec![0.0]],
            start: 0,
            gamma: 0.9,
            goals: None,
        };
        let d = discounted_state_distribution(&mdp, &Policy::uniform(2, 1)).unwrap();
        assert!((d[0] - 1.0).abs() < 1e-12);
        assert!(d[1].abs() < 1e-12);
    }

    #[test]
    fn distribution_two_cycle_geometric() {
        // deterministic 2-cycle with gamma = 0.5:
        // d(s0) = (1-g)(1 + g^2 + ...) = (1-g)/(1-g^2) = 2/3
        let mdp = TabularMdp {
            n_states: 2,
            n_actions: 1,
            transition: vec![vec![vec![0.0, 1.0]], vec![vec![1.0, 0.0]]],
            reward: vec![vec![0.0], vec![0.0]],
            start: 0,
            gamma: 0.5,
            goals: None,
        };
        let d = discounted_state_distribution(&mdp, &Policy::uniform(2, 1)).unwrap();
        assert!((d[0] - 2.0 / 3.0).abs() < 1e-12);
        assert!((d[1] - 1.0 / 3.0).abs() < 1e-12);
        assert!((d.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn backup_of_zero_heuristic_is_reward() {
        let mdp = two_state_chain(0.9);
        let b = bellman_backup(&mdp, &[0.0, 0.0]);
        assert_eq!(b[0][0], 1.0);
        assert_eq!(b[1][0], 0.0);
    }

    #[test]
    fn pessimism_of_optimal_value_and_counterexample() {
        let mdp = two_state_chain(0.9);
        let vstar = optimal_values(&mdp).unwrap().values;
        assert!(check_pessimism(&mdp, &vstar, 1e-9).is_empty());
        // zero heuristic with non-negative rewards is pessimistic
        assert!(check_pessimism(&mdp, &[0.0, 0.0], 1e-9).is_empty());
        // overestimating s breaks the condition even though h(g) <= V*(g)
        let h = vec![1.5, 0.0];
        let violations = check_pessimism(&mdp, &h, 1e-9);
        assert_eq!(violations, vec![0]);
        let backup = bellman_backup(&mdp, &h);
        assert!((backup[0][0] - 1.0).abs() < 1e-12);
    }
}
