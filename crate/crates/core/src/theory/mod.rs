//! Numerical verification of the theoretical claims behind heuristic-guided
//! reward shaping: exact value solves on small tabular MDPs, the
//! regret/bias performance-gap decomposition, pessimism checks, and the
//! random-walk convergence laws.

pub mod gap;
pub mod report;
pub mod tabular;
pub mod walk;

pub use gap::{bias_bound_terms, construct_heuristic, gap_decomposition, reshape, GapDecomposition, ReshapedMdp};
pub use report::{run_verification, ClaimResult, VerificationReport};
pub use tabular::{
    bellman_backup, check_pessimism, discounted_state_distribution, optimal_values,
    policy_evaluation, value_iteration, Policy, TabularMdp, ValueSolution,
};
pub use walk::{
    first_passage_experiment, random_walk_msd, random_walk_msd_exact_1d, FirstPassageStats,
    MsdEstimate,
};
