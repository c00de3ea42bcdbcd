//! Trajectory-instruction pair manipulations for probing scorer robustness.
//!
//! Each manipulation takes a matched pair and produces a pair that no longer
//! fulfills the instruction (or only partially does), while staying lexically
//! close to the original. A robust scorer should assign low scores to all of
//! them; a token-bag cosine scorer provably does not.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instruction::tokenize;

/// A free-form trajectory-instruction pair: ordered event strings plus the
/// instruction sentence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Pair {
    pub events: Vec<String>,
    pub text: String,
}

impl Pair {
    pub fn new(events: Vec<String>, text: impl Into<String>) -> Self {
        Self { events, text: text.into() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ManipulationKind {
    /// Invert the event order of the trajectory.
    Reverse,
    /// Prepend "do not" to the instruction.
    Negate,
    /// Apply the fixed synonym map to the instruction tokens.
    Rephrase,
    /// From (t1, l1) and aux (t2, l2): build (t2 + t1, l1 + l2).
    SwapConcat,
    /// From (t1, l1) and aux (_, l2): build (t1, l1 + l2).
    TruncateTraj,
    /// From (t1, l1) and aux (t2, _): build (t1 + t2, l1).
    TruncateInstr,
}

impl ManipulationKind {
    pub const ALL: [ManipulationKind; 6] = [
        ManipulationKind::Reverse,
        ManipulationKind::Negate,
        ManipulationKind::Rephrase,
        ManipulationKind::SwapConcat,
        ManipulationKind::TruncateTraj,
        ManipulationKind::TruncateInstr,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            ManipulationKind::Reverse => "reverse",
            ManipulationKind::Negate => "negate",
            ManipulationKind::Rephrase => "rephrase",
            ManipulationKind::SwapConcat => "swap_concat",
            ManipulationKind::TruncateTraj => "truncate_traj",
            ManipulationKind::TruncateInstr => "truncate_instr",
        }
    }

    fn needs_aux(&self) -> bool {
        matches!(
            self,
            ManipulationKind::SwapConcat
                | ManipulationKind::TruncateTraj
                | ManipulationKind::TruncateInstr
        )
    }
}

/// Fixed synonym table used by the rephrase manipulation.
pub const SYNONYMS: [(&str, &str); 20] = [
    ("touch", "tap"),
    ("pick", "grab"),
    ("pickup", "grab"),
    ("up", "upward"),
    ("down", "downward"),
    ("the", "a"),
    ("red", "crimson"),
    ("blue", "azure"),
    ("green", "emerald"),
    ("ball", "orb"),
    ("box", "crate"),
    ("key", "latchkey"),
    ("door", "gate"),
    ("open", "unlock"),
    ("room", "chamber"),
    ("climb", "scale"),
    ("ladder", "rungs"),
    ("rope", "line"),
    ("reach", "attain"),
    ("conveyor", "belt"),
];

fn rephrase(text: &str) -> String {
    tokenize(text)
        .into_iter()
        .map(|t| {
            SYNONYMS
                .iter()
                .find(|(k, _)| *k == t)
                .map(|(_, v)| v.to_string())
                .unwrap_or(t)
        })
        .collect::<Vec<_>>()
        .join(" ")
}

fn concat_events(a: &Pair, b: &Pair) -> Vec<String> {
    a.events.iter().chain(b.events.iter()).cloned().collect()
}

fn concat_text(a: &Pair, b: &Pair) -> String {
    format!("{} {}", a.text, b.text)
}

/// The unmanipulated concatenation (t1 + t2, l1 + l2), the reference class
/// for the swap and truncation manipulations.
pub fn matched_concat(pair: &Pair, aux: &Pair) -> Pair {
    Pair::new(concat_events(pair, aux), concat_text(pair, aux))
}

/// Apply a manipulation to a matched pair. Concatenation kinds require an
/// auxiliary pair.
pub fn manipulate(pair: &Pair, kind: ManipulationKind, aux: Option<&Pair>) -> Result<Pair> {
    if kind.needs_aux() && aux.is_none() {
        return Err(Error::Usage(format!(
            "manipulation {} requires an auxiliary pair",
            kind.name()
        )));
    }
    Ok(match kind {
        ManipulationKind::Reverse => {
            let mut events = pair.events.clone();
            events.reverse();
            Pair::new(events, pair.text.clone())
        }
        ManipulationKind::Negate => {
            Pair::new(pair.events.clone(), format!("do not {}", pair.text))
        }
        ManipulationKind::Rephrase => Pair::new(pair.events.clone(), rephrase(&pair.text)),
        ManipulationKind::SwapConcat => {
            let aux = aux.unwrap();
            Pair::new(concat_events(aux, pair), concat_text(pair, aux))
        }
        ManipulationKind::TruncateTraj => {
            let aux = aux.unwrap();
            Pair::new(pair.events.clone(), concat_text(pair, aux))
        }
        ManipulationKind::TruncateInstr => {
            let aux = aux.unwrap();
            Pair::new(concat_events(pair, aux), pair.text.clone())
        }
    })
}
