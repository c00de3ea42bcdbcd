//! Synthetic similarity scorers and noisy oracle reward models.
//!
//! The scorers replace learned embedding models with token-count bags and
//! cosine similarity. The substitution turns the two classic failure modes of
//! embedding-based reward models into exact, testable identities:
//!
//! - *composition insensitivity*: a bag is order-invariant, so any
//!   permutation of the events inside the scoring window gets exactly the
//!   same score;
//! - *state entanglement*: lexical overlap alone produces positive scores,
//!   so a negated instruction ("do not ...") still scores strictly above
//!   zero against the trajectory that fulfills the original.
//!
//! Oracle reward models with controlled false-positive/false-negative noise
//! live in [`oracle`]; pair manipulations and the probe harness in
//! [`manipulate`] and [`probe`].

pub mod manipulate;
pub mod oracle;
pub mod probe;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instruction::{tokenize, Instruction};

/// Sparse token-count vector. Keys are canonical lowercase tokens; the map
/// is ordered so that identical multisets produce bit-identical arithmetic.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureVector(pub BTreeMap<String, u64>);

impl FeatureVector {
    pub fn from_tokens<I: IntoIterator<Item = String>>(tokens: I) -> Self {
        let mut map = BTreeMap::new();
        for t in tokens {
            *map.entry(t).or_insert(0) += 1;
        }
        Self(map)
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    fn norm(&self) -> f64 {
        self.0.values().map(|&c| (c * c) as f64).sum::<f64>().sqrt()
    }

    fn dot(&self, other: &Self) -> f64 {
        self.0
            .iter()
            .filter_map(|(k, &a)| other.0.get(k).map(|&b| (a * b) as f64))
            .sum()
    }
}

/// Bag of word tokens over the last `window` events of a trajectory. Events
/// are split into whitespace tokens; order information inside the window is
/// deliberately discarded.
pub fn embed_trajectory(events: &[String], window: usize) -> FeatureVector {
    debug_assert!(window >= 1);
    let start = events.len().saturating_sub(window);
    FeatureVector::from_tokens(events[start..].iter().flat_map(|e| tokenize(e)))
}

/// Bag of the instruction's text tokens.
pub fn embed_instruction(instr: &Instruction) -> FeatureVector {
    FeatureVector::from_tokens(instr.tokens())
}

/// Cosine similarity of two count vectors; lands in [0, 1] because counts
/// are non-negative. Empty vectors are undefined input.
pub fn cosine(u: &FeatureVector, v: &FeatureVector) -> Result<f64> {
    if u.is_empty() || v.is_empty() {
        return Err(Error::Usage("cosine of an empty feature vector is undefined".into()));
    }
    // round-off can land a hair above 1 for identical vectors; abs
    // normalizes a negative zero
    Ok((u.dot(v) / (u.norm() * v.norm())).clamp(0.0, 1.0).abs())
}

/// Cosine that treats an empty side as "no similarity evidence" and returns
/// 0. Trajectory windows are frequently empty at episode start.
fn cosine_or_zero(u: &FeatureVector, v: &FeatureVector) -> f64 {
    if u.is_empty() || v.is_empty() {
        0.0
    } else {
        (u.dot(v) / (u.norm() * v.norm())).clamp(0.0, 1.0).abs()
    }
}

/// Markovian scorer: similarity of the current step's events alone against
/// the instruction. No events this step scores 0.
pub fn score_markovian(step_events: &[String], instr: &Instruction) -> f64 {
    cosine_or_zero(
        &FeatureVector::from_tokens(step_events.iter().flat_map(|e| tokenize(e))),
        &embed_instruction(instr),
    )
}

/// Non-Markovian scorer: similarity of the last `window` events against the
/// instruction. An empty window scores 0.
pub fn score_window(events: &[String], window: usize, instr: &Instruction) -> f64 {
    cosine_or_zero(&embed_trajectory(events, window), &embed_instruction(instr))
}

/// Similarity of a free-form (trajectory events, instruction text) pair,
/// used by the probe harness. Either side empty scores 0.
pub fn score_pair(events: &[String], text: &str) -> f64 {
    cosine_or_zero(
        &FeatureVector::from_tokens(events.iter().flat_map(|e| tokenize(e))),
        &FeatureVector::from_tokens(tokenize(text)),
    )
}

/// Class labels for scored trajectory-instruction pairs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairClass {
    Matched,
    Mismatched,
    MatchedConcat,
    Manipulated(manipulate::ManipulationKind),
}

/// One trajectory-instruction similarity record.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScoredPair {
    pub trajectory_id: usize,
    pub instruction: usize,
    pub score: f64,
    pub class: PairClass,
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn evs(names: &[&str]) -> Vec<String> {
        names.iter().map(|s| s.to_string()).collect()
    }

    fn instr(text: &str) -> Instruction {
        Instruction { index: 1, text: text.into(), events: vec!["x".into()] }
    }

    #[test]
    fn bag_counts_and_window() {
        let v = embed_trajectory(&evs(&["a", "b"]), 10);
        assert_eq!(v.0.get("a"), Some(&1));
        assert_eq!(v.0.get("b"), Some(&1));
        // bag is order-invariant
        assert_eq!(embed_trajectory(&evs(&["a", "b"]), 10), embed_trajectory(&evs(&["b", "a"]), 10));
        // window slicing keeps only the last W events
        let v = embed_trajectory(&evs(&["a", "a", "b", "c"]), 2);
        assert_eq!(v.0.get("a"), None);
        assert_eq!(v.0.get("b"), Some(&1));
        assert_eq!(v.0.get("c"), Some(&1));
    }

    #[test]
    fn instruction_embedding() {
        let v = embed_instruction(&instr("pick up key"));
        assert_eq!(v.0.len(), 3);
        let v = embed_instruction(&instr("do not pick up key"));
        assert_eq!(v.0.len(), 5);
        let v = embed_instruction(&instr("go go left"));
        assert_eq!(v.0.get("go"), Some(&2));
        assert_eq!(v.0.get("left"), Some(&1));
    }

    #[test]
    fn cosine_identities() {
        let u = FeatureVector::from_tokens(evs(&["pick", "up", "key"]));
        assert!((cosine(&u, &u).unwrap() - 1.0).abs() < 1e-15);
        let w = FeatureVector::from_tokens(evs(&["go", "left"]));
        assert_eq!(cosine(&u, &w).unwrap(), 0.0);
        // the negation false positive: 3 shared tokens of |u|=3, |v|=5
        let v = FeatureVector::from_tokens(evs(&["do", "not", "pick", "up", "key"]));
        let expect = 3.0 / 15.0_f64.sqrt();
        assert!((cosine(&u, &v).unwrap() - expect).abs() < 1e-12);
        assert!(cosine(&u, &FeatureVector::default()).is_err());
    }

    #[test]
    fn markovian_scores() {
        let i = instr("touch red ball");
        assert_eq!(score_markovian(&[], &i), 0.0);
        // single event sharing 1 of 3 instruction tokens
        let s = score_markovian(&evs(&["ball"]), &i);
        assert!((s - 1.0 / 3.0_f64.sqrt()).abs() < 1e-12);
        let s = score_markovian(&evs(&["touch red ball"]), &i);
        assert!((s - 1.0).abs() < 1e-15);
    }

    #[test]
    fn window_scores_mirror_cosine() {
        let i = instr("touch red ball");
        assert_eq!(score_window(&[], 4, &i), 0.0);
        let a = score_window(&evs(&["touch red ball", "touch blue key"]), 4, &i);
        let b = score_window(&evs(&["touch blue key", "touch red ball"]), 4, &i);
        assert_eq!(a, b);
        assert!(a > 0.0);
    }

    proptest! {
        /// Composition insensitivity as a literal identity: permuting events
        /// inside the window never changes the score.
        #[test]
        fn window_score_permutation_invariant(
            events in proptest::collection::vec("[a-d]( [a-d])?", 1..8),
            rot in 0usize..8,
        ) {
            let i = instr("a b c");
            let mut rotated = events.clone();
            rotated.rotate_left(rot % events.len());
            let w = events.len();
            prop_assert_eq!(score_window(&events, w, &i), score_window(&rotated, w, &i));
        }

        /// All scorers stay in [0, 1] on count vectors.
        #[test]
        fn score_range(events in proptest::collection::vec("[a-f]", 0..10)) {
            let i = instr("a b c");
            let s = score_window(&events, 5, &i);
            prop_assert!((0.0..=1.0).contains(&s));
            let s = score_markovian(&events, &i);
            prop_assert!((0.0..=1.0).contains(&s));
        }
    }
}
