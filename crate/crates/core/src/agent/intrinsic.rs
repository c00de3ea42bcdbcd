//! Count-based novelty bonus.
//!
//! A light-weight stand-in for learned novelty models: the bonus for landing
//! in a state with visit count `N` is `coef / sqrt(1 + N)`. Counts persist
//! across episodes for the whole run.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::env::EnvState;

/// `coef / sqrt(1 + N(s))`.
pub fn intrinsic_bonus(visit_count: u64, coef: f64) -> f64 {
    if coef == 0.0 {
        return 0.0;
    }
    coef / (1.0 + visit_count as f64).sqrt()
}

/// Run-wide visit counts keyed by a compact state fingerprint.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct VisitCounts {
    counts: BTreeMap<u64, u64>,
}

impl VisitCounts {
    /// Bonus for entering `state`, then bump its count.
    pub fn observe(&mut self, state: &EnvState, coef: f64) -> f64 {
        let key = state_key(state);
        let n = self.counts.entry(key).or_insert(0);
        let bonus = intrinsic_bonus(*n, coef);
        *n += 1;
        bonus
    }

    pub fn distinct_states(&self) -> usize {
        self.counts.len()
    }
}

/// Position, completion flags, and inventory packed into one key.
fn state_key(state: &EnvState) -> u64 {
    let mut key = (state.position.0 as u64 & 0xffff) << 48 | (state.position.1 as u64 & 0xffff) << 32;
    let mut flags = 0u64;
    for (i, &f) in state.flags.iter().enumerate().take(16) {
        if f {
            flags |= 1 << i;
        }
    }
    key |= flags << 8;
    key |= (state.inventory.len() as u64) & 0xff;
    key
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bonus_decays_with_visits() {
        assert_eq!(intrinsic_bonus(0, 1.0), 1.0);
        assert_eq!(intrinsic_bonus(3, 1.0), 0.5);
        assert_eq!(intrinsic_bonus(7, 0.0), 0.0);
    }

    #[test]
    fn counts_increment_and_key_on_flags() {
        let mut counts = VisitCounts::default();
        let mut s = EnvState {
            position: (2, 3),
            inventory: Default::default(),
            flags: vec![false, false],
            t: 0,
            done: false,
            failed: false,
        };
        let b1 = counts.observe(&s, 1.0);
        let b2 = counts.observe(&s, 1.0);
        assert!(b1 > b2);
        s.flags[0] = true;
        // different flag vector is a different state
        assert_eq!(counts.observe(&s, 1.0), 1.0);
        assert_eq!(counts.distinct_states(), 2);
    }
}
