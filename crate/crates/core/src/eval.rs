//! Metrics and significance testing.
//!
//! Accuracy and per-class accuracy for the sentiment task, micro-averaged
//! token-level cue/scope F1 for the negation task, and the approximate
//! randomization test used to compare paired system runs. Randomization
//! iterations draw from counter-based RNG streams, so the result is
//! independent of execution order and the iterations can run in parallel.

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;
use thiserror::Error;

use crate::corpus::NegLabel;
use crate::parallel;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("length mismatch: {0} predictions vs {1} golds")]
    LengthMismatch(usize, usize),
    #[error("{0}")]
    Usage(String),
}

pub type Result<T> = std::result::Result<T, EvalError>;

/// Exact-match fraction.
pub fn accuracy<T: PartialEq>(preds: &[T], golds: &[T]) -> Result<f64> {
    if preds.len() != golds.len() {
        return Err(EvalError::LengthMismatch(preds.len(), golds.len()));
    }
    if preds.is_empty() {
        return Err(EvalError::Usage("empty prediction list".into()));
    }
    let correct = preds.iter().zip(golds).filter(|(p, g)| p == g).count();
    Ok(correct as f64 / preds.len() as f64)
}

/// Accuracy over each gold-class subset. Classes absent from the gold are
/// omitted, not zero-filled.
pub fn per_class_accuracy<T: PartialEq + Ord + Clone + std::fmt::Display>(
    preds: &[T],
    golds: &[T],
) -> Result<BTreeMap<String, f64>> {
    if preds.len() != golds.len() {
        return Err(EvalError::LengthMismatch(preds.len(), golds.len()));
    }
    let mut hit: BTreeMap<T, (usize, usize)> = BTreeMap::new();
    for (p, g) in preds.iter().zip(golds) {
        let entry = hit.entry(g.clone()).or_insert((0, 0));
        entry.1 += 1;
        if p == g {
            entry.0 += 1;
        }
    }
    Ok(hit
        .into_iter()
        .map(|(label, (correct, total))| (label.to_string(), correct as f64 / total as f64))
        .collect())
}

/// Token-level category for F1 computation; B/I are collapsed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NegCategory {
    Cue,
    Scope,
}

/// Precision / recall / F1.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl Prf {
    fn from_counts(tp: usize, fp: usize, fn_: usize) -> Prf {
        let precision = if tp + fp > 0 {
            tp as f64 / (tp + fp) as f64
        } else {
            0.0
        };
        let recall = if tp + fn_ > 0 {
            tp as f64 / (tp + fn_) as f64
        } else {
            0.0
        };
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        Prf {
            precision,
            recall,
            f1,
        }
    }
}

fn in_category(label: NegLabel, category: NegCategory) -> bool {
    match category {
        NegCategory::Cue => label.is_cue(),
        NegCategory::Scope => label.is_scope(),
    }
}

/// Micro-averaged token-level P/R/F1 for one category over a corpus of
/// aligned (predicted, gold) tag sequences. A token counts as a true
/// positive when both sides put it in the category, B/I collapsed.
pub fn token_f1(pairs: &[(Vec<NegLabel>, Vec<NegLabel>)], category: NegCategory) -> Result<Prf> {
    let mut tp = 0;
    let mut fp = 0;
    let mut fn_ = 0;
    for (pred, gold) in pairs {
        if pred.len() != gold.len() {
            return Err(EvalError::LengthMismatch(pred.len(), gold.len()));
        }
        for (&p, &g) in pred.iter().zip(gold) {
            match (in_category(p, category), in_category(g, category)) {
                (true, true) => tp += 1,
                (true, false) => fp += 1,
                (false, true) => fn_ += 1,
                (false, false) => {}
            }
        }
    }
    Ok(Prf::from_counts(tp, fp, fn_))
}

/// Micro F1 over cue and scope positives combined (a true positive needs
/// the same category on both sides); the negation model-selection metric.
pub fn token_f1_combined(pairs: &[(Vec<NegLabel>, Vec<NegLabel>)]) -> Result<Prf> {
    let mut tp = 0;
    let mut fp = 0;
    let mut fn_ = 0;
    for (pred, gold) in pairs {
        if pred.len() != gold.len() {
            return Err(EvalError::LengthMismatch(pred.len(), gold.len()));
        }
        for (&p, &g) in pred.iter().zip(gold) {
            let pc = p != NegLabel::O;
            let gc = g != NegLabel::O;
            match (pc, gc) {
                (true, true) => {
                    if p.is_cue() == g.is_cue() {
                        tp += 1;
                    } else {
                        fp += 1;
                        fn_ += 1;
                    }
                }
                (true, false) => fp += 1,
                (false, true) => fn_ += 1,
                (false, false) => {}
            }
        }
    }
    Ok(Prf::from_counts(tp, fp, fn_))
}

/// Approximate randomization test between two systems' predictions on the
/// same test set. The statistic is the absolute accuracy difference; each
/// iteration independently swaps each example's prediction pair with
/// probability one half. The reported p uses the add-one estimator
/// (count + 1) / (iters + 1), so it is never zero. Iteration `k` draws from
/// stream `k` of a ChaCha generator seeded with `seed`, which makes the
/// result independent of iteration scheduling.
pub fn approx_rand_test<T: PartialEq + Sync>(
    preds_a: &[T],
    preds_b: &[T],
    golds: &[T],
    iters: usize,
    seed: u64,
) -> Result<f64> {
    if preds_a.len() != golds.len() {
        return Err(EvalError::LengthMismatch(preds_a.len(), golds.len()));
    }
    if preds_b.len() != golds.len() {
        return Err(EvalError::LengthMismatch(preds_b.len(), golds.len()));
    }
    if golds.is_empty() {
        return Err(EvalError::Usage("empty test set".into()));
    }
    let correct_a: Vec<bool> = preds_a.iter().zip(golds).map(|(p, g)| p == g).collect();
    let correct_b: Vec<bool> = preds_b.iter().zip(golds).map(|(p, g)| p == g).collect();
    let n = golds.len();
    let ca: i64 = correct_a.iter().filter(|&&c| c).count() as i64;
    let cb: i64 = correct_b.iter().filter(|&&c| c).count() as i64;
    // integer statistic |#correct_a - #correct_b| avoids float comparisons
    let observed = (ca - cb).abs();

    let at_least = parallel::count(iters, |k| {
        pseudo_statistic(&correct_a, &correct_b, seed, k as u64, n) >= observed
    });
    Ok((at_least + 1) as f64 / (iters + 1) as f64)
}

fn pseudo_statistic(
    correct_a: &[bool],
    correct_b: &[bool],
    seed: u64,
    stream: u64,
    n: usize,
) -> i64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let mut ca = 0i64;
    let mut cb = 0i64;
    for i in 0..n {
        let swap = rng.random_bool(0.5);
        let (a, b) = if swap {
            (correct_b[i], correct_a[i])
        } else {
            (correct_a[i], correct_b[i])
        };
        ca += a as i64;
        cb += b as i64;
    }
    (ca - cb).abs()
}

/// Exact p-value by enumerating all 2^n swap patterns (test oracle for
/// small n). Returns the plain fraction of patterns whose pseudo statistic
/// is at least the observed one.
pub fn exact_rand_test<T: PartialEq>(preds_a: &[T], preds_b: &[T], golds: &[T]) -> Result<f64> {
    if preds_a.len() != golds.len() || preds_b.len() != golds.len() {
        return Err(EvalError::LengthMismatch(preds_a.len(), golds.len()));
    }
    let n = golds.len();
    if n > 20 {
        return Err(EvalError::Usage(format!(
            "exact enumeration over 2^{n} patterns is not sensible"
        )));
    }
    let correct_a: Vec<i64> = preds_a
        .iter()
        .zip(golds)
        .map(|(p, g)| (p == g) as i64)
        .collect();
    let correct_b: Vec<i64> = preds_b
        .iter()
        .zip(golds)
        .map(|(p, g)| (p == g) as i64)
        .collect();
    let observed = (correct_a.iter().sum::<i64>() - correct_b.iter().sum::<i64>()).abs();
    let total = 1usize << n;
    let mut at_least = 0usize;
    for pattern in 0..total {
        let mut ca = 0i64;
        let mut cb = 0i64;
        for i in 0..n {
            if pattern >> i & 1 == 1 {
                ca += correct_b[i];
                cb += correct_a[i];
            } else {
                ca += correct_a[i];
                cb += correct_b[i];
            }
        }
        if (ca - cb).abs() >= observed {
            at_least += 1;
        }
    }
    Ok(at_least as f64 / total as f64)
}

/// The paired-runs decision rule: significant iff at least three of the
/// five per-seed p-values are strictly below 0.01.
pub fn significance_decision(p_values: &[f64]) -> Result<bool> {
    if p_values.len() != 5 {
        return Err(EvalError::Usage(format!(
            "expected exactly 5 p-values, got {}",
            p_values.len()
        )));
    }
    Ok(p_values.iter().filter(|&&p| p < 0.01).count() >= 3)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn accuracy_basics() {
        assert_eq!(accuracy(&[1, 2, 3], &[1, 2, 3]).unwrap(), 1.0);
        assert_eq!(accuracy(&[1, 2, 3, 4], &[1, 2, 3, 0]).unwrap(), 0.75);
        assert!(accuracy(&[1], &[1, 2]).is_err());
        assert!(accuracy::<i32>(&[], &[]).is_err());
    }

    #[test]
    fn per_class_accuracy_uses_gold_subsets() {
        // gold classes: a a a b b c; predictions right on 2 a's, 1 b, 0 c
        let golds = vec!["a", "a", "a", "b", "b", "c"];
        let preds = vec!["a", "a", "b", "b", "c", "a"];
        let by_class = per_class_accuracy(&preds, &golds).unwrap();
        assert!((by_class["a"] - 2.0 / 3.0).abs() < 1e-12);
        assert!((by_class["b"] - 0.5).abs() < 1e-12);
        assert_eq!(by_class["c"], 0.0);
        assert_eq!(by_class.len(), 3);
    }

    fn tags(s: &str) -> Vec<NegLabel> {
        s.split_whitespace()
            .map(|t| NegLabel::parse(t).unwrap())
            .collect()
    }

    #[test]
    fn perfect_tags_give_f1_one() {
        let gold = tags("O B-Cue B-Scope I-Scope O");
        let pairs = vec![(gold.clone(), gold)];
        assert_eq!(token_f1(&pairs, NegCategory::Scope).unwrap().f1, 1.0);
        assert_eq!(token_f1(&pairs, NegCategory::Cue).unwrap().f1, 1.0);
    }

    #[test]
    fn all_o_predictions_have_zero_recall_and_f1() {
        let pairs = vec![(tags("O O O O"), tags("O B-Scope I-Scope O"))];
        let prf = token_f1(&pairs, NegCategory::Scope).unwrap();
        assert_eq!(prf.recall, 0.0);
        assert_eq!(prf.f1, 0.0);
    }

    #[test]
    fn partial_scope_overlap_matches_hand_computation() {
        // pred marks 3 scope tokens, 2 correct; gold has 4
        let pairs = vec![(
            tags("B-Scope I-Scope O O B-Scope O"),
            tags("B-Scope I-Scope I-Scope I-Scope O O"),
        )];
        let prf = token_f1(&pairs, NegCategory::Scope).unwrap();
        assert!((prf.precision - 2.0 / 3.0).abs() < 1e-12);
        assert!((prf.recall - 0.5).abs() < 1e-12);
        assert!((prf.f1 - 4.0 / 7.0).abs() < 1e-12);
    }

    #[test]
    fn token_f1_swap_symmetry() {
        let pred = tags("B-Scope O B-Scope I-Scope O B-Cue");
        let gold = tags("B-Scope I-Scope O I-Scope O O");
        let fwd = token_f1(&[(pred.clone(), gold.clone())], NegCategory::Scope).unwrap();
        let rev = token_f1(&[(gold, pred)], NegCategory::Scope).unwrap();
        assert_eq!(fwd.precision, rev.recall);
        assert_eq!(fwd.recall, rev.precision);
        assert!((fwd.f1 - rev.f1).abs() < 1e-12);
    }

    #[test]
    fn identical_predictions_give_p_one() {
        let golds: Vec<u8> = (0..50).map(|i| (i % 2) as u8).collect();
        let preds: Vec<u8> = (0..50).map(|i| (i % 3) as u8).collect();
        let p = approx_rand_test(&preds, &preds, &golds, 1000, 7).unwrap();
        assert_eq!(p, 1.0);
    }

    #[test]
    fn extreme_difference_gives_tiny_p() {
        let golds: Vec<u8> = vec![1; 100];
        let all_right: Vec<u8> = vec![1; 100];
        let all_wrong: Vec<u8> = vec![0; 100];
        let p = approx_rand_test(&all_right, &all_wrong, &golds, 10_000, 3).unwrap();
        assert!(p < 0.001, "p = {p}");
    }

    #[test]
    fn randomization_test_is_seed_deterministic() {
        let golds: Vec<u8> = (0..40).map(|i| (i % 2) as u8).collect();
        let a: Vec<u8> = (0..40).map(|i| (i % 4 == 0) as u8).collect();
        let b: Vec<u8> = (0..40).map(|i| (i % 3 == 0) as u8).collect();
        let p1 = approx_rand_test(&a, &b, &golds, 2000, 11).unwrap();
        let p2 = approx_rand_test(&a, &b, &golds, 2000, 11).unwrap();
        assert_eq!(p1, p2);
    }

    #[test]
    fn decision_rule_needs_three_of_five_strictly_below() {
        assert!(significance_decision(&[0.005, 0.005, 0.005, 0.5, 0.5]).unwrap());
        assert!(!significance_decision(&[0.005, 0.005, 0.5, 0.5, 0.5]).unwrap());
        assert!(!significance_decision(&[0.01, 0.01, 0.01, 0.01, 0.01]).unwrap());
        assert!(significance_decision(&[0.0099, 0.0099, 0.0099, 1.0, 1.0]).unwrap());
        assert!(significance_decision(&[0.1; 4]).is_err());
    }
}
