//! Reshaped MDPs and the exact performance-gap decomposition.
//!
//! Reshaping folds a state heuristic `h` into the reward and shrinks the
//! discount:
//!
//! ```text
//! r~(s,a) = r(s,a) + (1 - beta) * gamma * E_{s'}[h(s')],    gamma~ = beta * gamma
//! ```
//!
//! For any policy the gap in the original MDP splits exactly into a regret
//! term (suboptimality inside the reshaped MDP) and a bias term (error
//! introduced by solving the reshaped MDP instead of the original):
//!
//! ```text
//! V*(s0) - V^pi(s0) = Regret(h,beta,pi) + Bias(h,beta,pi)
//! Regret = beta (V~*(s0) - V~pi(s0)) + (1-beta)/(1-gamma) (V~*(d) - V~pi(d))
//! Bias   = (V*(s0) - V~*(s0))
//!        + gamma (1-beta)/(1-gamma) E_{s,a ~ d, s' ~ P}[h(s') - V~*(s')]
//! ```
//!
//! with `d` the discounted average state distribution of `pi` in the
//! original MDP. All expectations are computed in closed form via matrix
//! geometric series, so the identity is checked to solver precision.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::theory::tabular::{
    discounted_state_distribution, optimal_values, policy_evaluation, Policy, TabularMdp,
};

/// A base MDP reshaped by heuristic `h` and mixing coefficient `beta`.
#[derive(Debug, Clone)]
pub struct ReshapedMdp {
    pub beta: f64,
    /// The reshaped MDP itself: reward `r~` and discount `gamma~ = beta*gamma`.
    pub mdp: TabularMdp,
}

/// Build the reshaped MDP for heuristic `h` and mixing coefficient `beta`.
pub fn reshape(base: &TabularMdp, h: &[f64], beta: f64) -> Result<ReshapedMdp> {
    if !(0.0..=1.0).contains(&beta) {
        return Err(Error::Config(format!("beta must be in [0,1], got {beta}")));
    }
    if h.len() != base.n_states {
        return Err(Error::Config("heuristic length must match the state count".into()));
    }
    base.validate()?;
    let mut mdp = base.clone();
    mdp.gamma = beta * base.gamma;
    for s in 0..base.n_states {
        for a in 0..base.n_actions {
            let eh: f64 = base.transition[s][a].iter().zip(h).map(|(p, v)| p * v).sum();
            mdp.reward[s][a] = base.reward[s][a] + (1.0 - beta) * base.gamma * eh;
        }
    }
    Ok(ReshapedMdp { beta, mdp })
}

/// Exact evaluation of the performance-gap decomposition for one
/// (heuristic, beta, policy) triple.
#[derive(Debug, Clone)]
pub struct GapDecomposition {
    pub regret: f64,
    pub bias: f64,
    /// `V*(s0) - V^pi(s0)` computed directly.
    pub gap: f64,
    /// `|regret + bias - gap|`; the theorem claims this is identically 0.
    pub residual: f64,
}

pub fn gap_decomposition(
    mdp: &TabularMdp,
    h: &[f64],
    beta: f64,
    pi: &Policy,
) -> Result<GapDecomposition> {
    let s0 = mdp.start;
    let gamma = mdp.gamma;
    let vstar = optimal_values(mdp)?.values;
    let vpi = policy_evaluation(mdp, pi)?;
    let reshaped = reshape(mdp, h, beta)?;
    let vtil_star = optimal_values(&reshaped.mdp)?.values;
    let vtil_pi = policy_evaluation(&reshaped.mdp, pi)?;
    let d = discounted_state_distribution(mdp, pi)?;

    let expect = |v: &[f64]| -> f64 { d.iter().zip(v).map(|(p, x)| p * x).sum() };
    let regret = beta * (vtil_star[s0] - vtil_pi[s0])
        + (1.0 - beta) / (1.0 - gamma) * (expect(&vtil_star) - expect(&vtil_pi));

    // one-step successor expectation under (s ~ d, a ~ pi, s' ~ P)
    let mut successor = 0.0;
    for s in 0..mdp.n_states {
        for a in 0..mdp.n_actions {
            let w = d[s] * pi.probs[s][a];
            if w == 0.0 {
                continue;
            }
            let e: f64 = mdp.transition[s][a]
                .iter()
                .enumerate()
                .map(|(sp, p)| p * (h[sp] - vtil_star[sp]))
                .sum();
            successor += w * e;
        }
    }
    let bias = (vstar[s0] - vtil_star[s0]) + gamma * (1.0 - beta) / (1.0 - gamma) * successor;

    let gap = vstar[s0] - vpi[s0];
    let residual = (regret + bias - gap).abs();
    Ok(GapDecomposition { regret, bias, gap, residual })
}

/// The two expectation sums bounding the bias term:
///
/// ```text
/// B1 = E_{rho^pi*}[ sum_{t>=1} (beta gamma)^(t-1) (V*(s_t) - h(s_t)) ]
/// B2 = E_{rho^pi }[ sum_{t>=1} gamma^(t-1)        (h(s_t) - V~*(s_t)) ]
/// ```
///
/// computed in closed form as `e_s0^T P (I - c P)^{-1} f`.
pub fn bias_bound_terms(mdp: &TabularMdp, h: &[f64], beta: f64, pi: &Policy) -> Result<(f64, f64)> {
    let opt = optimal_values(mdp)?;
    let pistar = Policy::deterministic(&opt.greedy, mdp.n_actions);
    let reshaped = reshape(mdp, h, beta)?;
    let vtil_star = optimal_values(&reshaped.mdp)?.values;

    let series = |p: DMatrix<f64>, decay: f64, f: DVector<f64>| -> Result<f64> {
        let system = DMatrix::identity(mdp.n_states, mdp.n_states) - &p * decay;
        let x = system
            .lu()
            .solve(&f)
            .ok_or_else(|| Error::Verification("singular series system".into()))?;
        Ok((&p * x)[mdp.start])
    };

    let f1 = DVector::from_fn(mdp.n_states, |s, _| opt.values[s] - h[s]);
    let b1 = series(mdp.transition_under(&pistar), beta * mdp.gamma, f1)?;
    let f2 = DVector::from_fn(mdp.n_states, |s, _| h[s] - vtil_star[s]);
    let b2 = series(mdp.transition_under(pi), mdp.gamma, f2)?;
    Ok((b1, b2))
}

/// Heuristic samples along a trajectory from similarity rewards:
/// `h(s_t) = A(s_t) V*(s_t)` on intermediate goal states and 0 elsewhere,
/// where `A` is the running product of agent rewards over the running
/// product of optimal-trajectory rewards, clamped to [0, 1].
pub fn construct_heuristic(
    agent_rewards: &[f64],
    optimal_rewards: &[f64],
    vstar: &[f64],
    on_goal_set: &[bool],
) -> Result<Vec<f64>> {
    let t = agent_rewards.len();
    if optimal_rewards.len() != t || vstar.len() != t || on_goal_set.len() != t {
        return Err(Error::Config("heuristic construction inputs must have equal length".into()));
    }
    let mut agent_prod = 1.0;
    let mut opt_prod = 1.0;
    let mut out = Vec::with_capacity(t);
    for i in 0..t {
        agent_prod *= agent_rewards[i];
        opt_prod *= optimal_rewards[i];
        if opt_prod == 0.0 {
            return Err(Error::Config(format!(
                "optimal-trajectory reward product is zero at step {i}"
            )));
        }
        let a = (agent_prod / opt_prod).clamp(0.0, 1.0);
        out.push(if on_goal_set[i] { a * vstar[i] } else { 0.0 });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::theory::tabular::{bellman_backup, random_mdp, random_policy, two_state_chain};
    use rand::Rng;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_mdp10(rng: &mut ChaCha8Rng) -> TabularMdp {
        random_mdp(rng, 10, 3)
    }

    #[test]
    fn reshape_identities() {
        let mdp = two_state_chain(0.9);
        // zero heuristic keeps the reward, scales the discount
        let r = reshape(&mdp, &[0.0, 0.0], 0.5).unwrap();
        assert_eq!(r.mdp.reward, mdp.reward);
        assert!((r.mdp.gamma - 0.45).abs() < 1e-15);
        // beta = 1 recovers the original MDP exactly
        let r = reshape(&mdp, &[3.0, -1.0], 1.0).unwrap();
        assert_eq!(r.mdp.reward, mdp.reward);
        assert_eq!(r.mdp.gamma, mdp.gamma);
        // deterministic successor with h(s') = 1: r~ = 0 + 0.5 * 0.9 * 1
        let mut zero = two_state_chain(0.9);
        zero.reward = vec![vec![0.0], vec![0.0]];
        let r = reshape(&zero, &[0.0, 1.0], 0.5).unwrap();
        assert!((r.mdp.reward[0][0] - 0.45).abs() < 1e-15);
    }

    #[test]
    fn backup_equivalence_under_reshaping() {
        // (B~ h)(s,a) == (B h)(s,a) for every beta
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..5 {
            let mdp = random_mdp10(&mut rng);
            let h: Vec<f64> = (0..mdp.n_states).map(|_| rng.gen::<f64>() * 2.0).collect();
            let base = bellman_backup(&mdp, &h);
            for beta in [0.0, 0.3, 0.7, 1.0] {
                let reshaped = reshape(&mdp, &h, beta).unwrap();
                let tilde = bellman_backup(&reshaped.mdp, &h);
                for s in 0..mdp.n_states {
                    for a in 0..mdp.n_actions {
                        assert!(
                            (tilde[s][a] - base[s][a]).abs() <= 1e-12,
                            "backup mismatch at ({s},{a}), beta {beta}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn gap_reduces_to_plain_suboptimality_at_beta_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mdp = random_mdp10(&mut rng);
        let pi = random_policy(&mut rng, mdp.n_states, mdp.n_actions);
        let h = vec![0.0; mdp.n_states];
        let g = gap_decomposition(&mdp, &h, 1.0, &pi).unwrap();
        assert!(g.bias.abs() < 1e-9, "bias {}", g.bias);
        assert!((g.regret - g.gap).abs() < 1e-9);
        assert!(g.residual < 1e-9);
    }

    #[test]
    fn decomposition_is_an_identity_on_random_mdps() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..8 {
            let mdp = random_mdp10(&mut rng);
            let pi = random_policy(&mut rng, mdp.n_states, mdp.n_actions);
            let h: Vec<f64> = (0..mdp.n_states).map(|_| rng.gen::<f64>() * 2.0).collect();
            for beta in [0.0, 0.3, 0.7, 1.0] {
                let g = gap_decomposition(&mdp, &h, beta, &pi).unwrap();
                assert!(g.residual <= 1e-8, "residual {} at beta {beta}", g.residual);
            }
        }
    }

    #[test]
    fn bias_bound_terms_behave() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..5 {
            let mdp = random_mdp10(&mut rng);
            let pi = random_policy(&mut rng, mdp.n_states, mdp.n_actions);
            let vstar = optimal_values(&mdp).unwrap().values;
            // h = V*: the first term vanishes for any beta
            let (b1, _) = bias_bound_terms(&mdp, &vstar, 0.7, &pi).unwrap();
            assert!(b1.abs() < 1e-9, "B1 {b1}");
            // pessimistic h (shifted below V*): B2 <= 0
            let h: Vec<f64> = vstar.iter().map(|v| v - 0.5).collect();
            if check_pessimism_ok(&mdp, &h) {
                let (_, b2) = bias_bound_terms(&mdp, &h, 0.7, &pi).unwrap();
                assert!(b2 <= 1e-10, "B2 {b2}");
            }
        }
    }

    fn check_pessimism_ok(mdp: &TabularMdp, h: &[f64]) -> bool {
        crate::theory::tabular::check_pessimism(mdp, h, 1e-9).is_empty()
    }

    #[test]
    fn bias_bound_matches_truncated_series() {
        // hand 2-state case evaluated by direct series summation
        let mdp = two_state_chain(0.9);
        let pi = Policy::deterministic(&[0, 0], 1);
        let h = vec![0.25, 0.1];
        let beta = 0.3;
        let (b1, b2) = bias_bound_terms(&mdp, &h, beta, &pi).unwrap();

        let vstar = optimal_values(&mdp).unwrap().values;
        let vtil = optimal_values(&reshape(&mdp, &h, beta).unwrap().mdp).unwrap().values;
        // trajectory from state 0 is s0 -> g -> g -> ...
        let mut expected_b1 = 0.0;
        let mut expected_b2 = 0.0;
        for t in 1..2000 {
            let s = 1usize; // after the first step we are absorbed in g
            expected_b1 += (beta * mdp.gamma).powi(t as i32 - 1) * (vstar[s] - h[s]);
            expected_b2 += mdp.gamma.powi(t as i32 - 1) * (h[s] - vtil[s]);
        }
        assert!((b1 - expected_b1).abs() < 1e-12, "{b1} vs {expected_b1}");
        assert!((b2 - expected_b2).abs() < 1e-12, "{b2} vs {expected_b2}");
    }

    #[test]
    fn heuristic_construction_cases() {
        // agent matches expert: A = 1, h = V* on goal-set states
        let h = construct_heuristic(&[1.0, 1.0], &[1.0, 1.0], &[0.8, 0.9], &[true, true]).unwrap();
        assert_eq!(h, vec![0.8, 0.9]);
        // off the goal set the heuristic is 0
        let h = construct_heuristic(&[1.0], &[1.0], &[0.8], &[false]).unwrap();
        assert_eq!(h, vec![0.0]);
        // half-ratio products: (0.5*0.5)/(1*1) = 0.25
        let h = construct_heuristic(&[0.5, 0.5], &[1.0, 1.0], &[1.0, 1.0], &[true, true]).unwrap();
        assert!((h[1] - 0.25).abs() < 1e-15);
        // ratios above 1 clamp
        let h = construct_heuristic(&[2.0], &[1.0], &[1.0], &[true]).unwrap();
        assert_eq!(h[0], 1.0);
        assert!(construct_heuristic(&[1.0], &[0.0], &[1.0], &[true]).is_err());
    }
}
