//! Manipulated-pair probe: score matched, mismatched, and manipulated
//! trajectory-instruction pairs and tabulate the distributions per class.

use std::fs;
use std::io::Write as _;
use std::path::Path;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_chacha::rand_core::SeedableRng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scorer::manipulate::{manipulate, matched_concat, ManipulationKind, Pair};
use crate::scorer::score_pair;

pub const HISTOGRAM_BINS: usize = 10;

/// Score distribution for one pair class.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClassStats {
    pub class: String,
    pub kind: String,
    pub n: usize,
    pub mean: f64,
    pub min: f64,
    pub max: f64,
    /// Counts over 10 equal-width bins of [0, 1]; a score of exactly 1 lands
    /// in the last bin.
    pub histogram: Vec<usize>,
}

fn stats(class: &str, kind: &str, scores: &[f64]) -> ClassStats {
    let n = scores.len();
    let mut histogram = vec![0usize; HISTOGRAM_BINS];
    for &s in scores {
        let bin = ((s * HISTOGRAM_BINS as f64) as usize).min(HISTOGRAM_BINS - 1);
        histogram[bin] += 1;
    }
    ClassStats {
        class: class.into(),
        kind: kind.into(),
        n,
        mean: if n == 0 { 0.0 } else { scores.iter().sum::<f64>() / n as f64 },
        min: scores.iter().cloned().fold(f64::INFINITY, f64::min),
        max: scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        histogram,
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProbeReport {
    pub classes: Vec<ClassStats>,
}

impl ProbeReport {
    pub fn class(&self, class: &str, kind: &str) -> Option<&ClassStats> {
        self.classes.iter().find(|c| c.class == class && c.kind == kind)
    }

    /// CSV table with header `class,kind,n,mean,min,max`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut out = fs::File::create(path)?;
        writeln!(out, "class,kind,n,mean,min,max")?;
        for c in &self.classes {
            writeln!(out, "{},{},{},{:.6},{:.6},{:.6}", c.class, c.kind, c.n, c.mean, c.min, c.max)?;
        }
        Ok(())
    }

    /// JSON histogram file: class/kind keyed bin counts.
    pub fn write_histograms(&self, path: &Path) -> Result<()> {
        let mut map = serde_json::Map::new();
        for c in &self.classes {
            let key = if c.kind.is_empty() { c.class.clone() } else { format!("{}:{}", c.class, c.kind) };
            map.insert(key, serde_json::json!(c.histogram));
        }
        fs::write(path, serde_json::to_string_pretty(&serde_json::Value::Object(map))?)?;
        Ok(())
    }
}

/// Score matched pairs plus derived mismatched, concatenated, and
/// manipulated classes. Mismatched pairs keep trajectory i and borrow the
/// instruction of a seeded j != i; concatenation kinds pair i with i+1
/// (cyclically).
pub fn noise_probe(matched: &[Pair], seed: u64) -> Result<ProbeReport> {
    if matched.is_empty() {
        return Err(Error::Usage("noise probe needs at least one matched pair".into()));
    }
    let n = matched.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut classes = Vec::new();

    let matched_scores: Vec<f64> = matched.iter().map(|p| score_pair(&p.events, &p.text)).collect();
    classes.push(stats("matched", "", &matched_scores));

    let mismatched_scores: Vec<f64> = matched
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let j = if n == 1 { 0 } else { (i + 1 + rng.gen_range(0..n - 1)) % n };
            score_pair(&p.events, &matched[j].text)
        })
        .collect();
    classes.push(stats("mismatched", "", &mismatched_scores));

    let concat_scores: Vec<f64> = (0..n)
        .map(|i| {
            let c = matched_concat(&matched[i], &matched[(i + 1) % n]);
            score_pair(&c.events, &c.text)
        })
        .collect();
    classes.push(stats("matched_concat", "", &concat_scores));

    for kind in ManipulationKind::ALL {
        let scores: Vec<f64> = (0..n)
            .map(|i| {
                let aux = &matched[(i + 1) % n];
                let p = manipulate(&matched[i], kind, Some(aux))?;
                Ok(score_pair(&p.events, &p.text))
            })
            .collect::<Result<_>>()?;
        classes.push(stats("manipulated", kind.name(), &scores));
    }

    Ok(ProbeReport { classes })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pairs() -> Vec<Pair> {
        vec![
            Pair::new(vec!["touch red ball".into()], "touch the red ball"),
            Pair::new(vec!["touch blue key".into()], "touch the blue key"),
            Pair::new(vec!["open door".into(), "touch green box".into()], "touch the green box"),
        ]
    }

    #[test]
    fn swap_class_equals_matched_concat_exactly() {
        let report = noise_probe(&pairs(), 11).unwrap();
        let swap = report.class("manipulated", "swap_concat").unwrap();
        let concat = report.class("matched_concat", "").unwrap();
        assert_eq!(swap.mean, concat.mean);
        assert_eq!(swap.min, concat.min);
        assert_eq!(swap.max, concat.max);
    }

    #[test]
    fn disjoint_mismatches_score_zero() {
        let disjoint = vec![
            Pair::new(vec!["alpha".into()], "alpha"),
            Pair::new(vec!["beta".into()], "beta"),
        ];
        let report = noise_probe(&disjoint, 5).unwrap();
        assert_eq!(report.class("mismatched", "").unwrap().mean, 0.0);
        assert_eq!(report.class("matched", "").unwrap().mean, 1.0);
    }

    #[test]
    fn negated_three_token_instruction_closed_form() {
        let p = vec![Pair::new(vec!["pick up key".into()], "pick up key")];
        let report = noise_probe(&p, 1).unwrap();
        let neg = report.class("manipulated", "negate").unwrap();
        assert!((neg.mean - 3.0 / 15.0_f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn empty_input_is_an_error() {
        assert!(noise_probe(&[], 0).is_err());
    }
}
