//! Per-class precision, recall and F1 with their macro average.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
}

/// Binary classification metrics; index 0 is non-hateful, 1 hateful.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub per_class: [ClassMetrics; 2],
    pub macro_f1: f64,
    pub accuracy: f64,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Empty denominators give 0 for precision, recall and F1.
pub fn macro_metrics(y_true: &[u8], y_pred: &[u8]) -> Result<Metrics> {
    if y_true.len() != y_pred.len() {
        return Err(Error::Shape(format!("{} truths for {} predictions", y_true.len(), y_pred.len())));
    }
    if y_true.is_empty() {
        return Err(Error::Empty("no predictions to score".into()));
    }
    if let Some(l) = y_true.iter().chain(y_pred).find(|&&l| l > 1) {
        return Err(Error::InvalidInput(format!("label {l} is not 0 or 1")));
    }
    let mut confusion = [[0usize; 2]; 2];
    for (&t, &p) in y_true.iter().zip(y_pred) {
        confusion[usize::from(t)][usize::from(p)] += 1;
    }
    let class = |c: usize| {
        let tp = confusion[c][c];
        let predicted = confusion[0][c] + confusion[1][c];
        let actual = confusion[c][0] + confusion[c][1];
        let precision = ratio(tp, predicted);
        let recall = ratio(tp, actual);
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        ClassMetrics {
            precision,
            recall,
            f1,
            support: actual,
        }
    };
    let per_class = [class(0), class(1)];
    Ok(Metrics {
        per_class,
        macro_f1: (per_class[0].f1 + per_class[1].f1) / 2.0,
        accuracy: ratio(confusion[0][0] + confusion[1][1], y_true.len()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn perfect() {
        let m = macro_metrics(&[0, 1, 1, 0], &[0, 1, 1, 0]).unwrap();
        assert_eq!(m.macro_f1, 1.0);
        assert_eq!(m.accuracy, 1.0);
    }

    #[test]
    fn constant_prediction_on_balanced_truth() {
        let m = macro_metrics(&[0, 0, 1, 1], &[0, 0, 0, 0]).unwrap();
        assert!((m.per_class[0].f1 - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(m.per_class[1].f1, 0.0);
        assert!((m.macro_f1 - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn empty_rejected() {
        assert!(matches!(macro_metrics(&[], &[]), Err(Error::Empty(_))));
    }

    /// Confusion counts taken element by element with no shared helpers.
    fn naive(t: &[u8], p: &[u8]) -> (f64, f64) {
        let mut f1s = Vec::new();
        for c in [0u8, 1] {
            let tp = t.iter().zip(p).filter(|(a, b)| **a == c && **b == c).count() as f64;
            let fp = t.iter().zip(p).filter(|(a, b)| **a != c && **b == c).count() as f64;
            let fneg = t.iter().zip(p).filter(|(a, b)| **a == c && **b != c).count() as f64;
            let f1 = if tp == 0.0 { 0.0 } else { 2.0 * tp / (2.0 * tp + fp + fneg) };
            f1s.push(f1);
        }
        let acc = t.iter().zip(p).filter(|(a, b)| a == b).count() as f64 / t.len() as f64;
        ((f1s[0] + f1s[1]) / 2.0, acc)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100_000))]
        #[test]
        fn matches_naive_confusion_oracle(pairs in prop::collection::vec((0u8..2, 0u8..2), 1..12)) {
            let (t, p): (Vec<u8>, Vec<u8>) = pairs.into_iter().unzip();
            let m = macro_metrics(&t, &p).unwrap();
            let (f, a) = naive(&t, &p);
            prop_assert!((m.macro_f1 - f).abs() < 1e-12);
            prop_assert!((m.accuracy - a).abs() < 1e-12);
            let flip = |v: &[u8]| v.iter().map(|x| 1 - x).collect::<Vec<u8>>();
            let s = macro_metrics(&flip(&t), &flip(&p)).unwrap();
            prop_assert!((s.macro_f1 - m.macro_f1).abs() < 1e-12);
            for c in m.per_class {
                prop_assert!((0.0..=1.0).contains(&c.f1));
            }
        }
    }
}
