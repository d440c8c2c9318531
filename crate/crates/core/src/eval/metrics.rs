//! Micro/Macro-F1 and accuracy from predicted and true class ids.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct F1Scores {
    pub micro_f1: f64,
    pub macro_f1: f64,
    pub accuracy: f64,
}

/// Pooled (micro) and per-class-averaged (macro) F1 over `C` classes, plus
/// plain accuracy. A class with no true and no predicted instances
/// contributes F1 = 0 to the macro average.
pub fn micro_macro_f1(pred: &[usize], truth: &[usize], num_classes: usize) -> Result<F1Scores> {
    if pred.len() != truth.len() {
        return Err(Error::Shape(format!(
            "{} predictions vs {} labels",
            pred.len(),
            truth.len()
        )));
    }
    if pred.is_empty() {
        return Err(Error::Config("empty prediction vector".into()));
    }
    if let Some(&bad) = pred.iter().chain(truth).find(|&&v| v >= num_classes) {
        return Err(Error::IndexOutOfRange {
            index: bad,
            num_nodes: num_classes,
        });
    }

    let mut tp = vec![0usize; num_classes];
    let mut fp = vec![0usize; num_classes];
    let mut fnn = vec![0usize; num_classes];
    let mut correct = 0usize;
    for (&p, &t) in pred.iter().zip(truth) {
        if p == t {
            tp[p] += 1;
            correct += 1;
        } else {
            fp[p] += 1;
            fnn[t] += 1;
        }
    }

    let f1 = |tp: usize, fp: usize, fnn: usize| {
        let denom = 2 * tp + fp + fnn;
        if denom == 0 {
            0.0
        } else {
            2.0 * tp as f64 / denom as f64
        }
    };
    let micro = f1(
        tp.iter().sum(),
        fp.iter().sum(),
        fnn.iter().sum(),
    );
    let macro_f1 = (0..num_classes)
        .map(|c| f1(tp[c], fp[c], fnn[c]))
        .sum::<f64>()
        / num_classes as f64;
    Ok(F1Scores {
        micro_f1: micro,
        macro_f1,
        accuracy: correct as f64 / pred.len() as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn perfect_prediction() {
        let s = micro_macro_f1(&[0, 1, 2, 1], &[0, 1, 2, 1], 3).unwrap();
        assert_eq!(s.micro_f1, 1.0);
        assert_eq!(s.macro_f1, 1.0);
        assert_eq!(s.accuracy, 1.0);
    }

    #[test]
    fn hand_computed_example() {
        let s = micro_macro_f1(&[0, 0, 1, 1], &[0, 1, 1, 1], 2).unwrap();
        assert_abs_diff_eq!(s.micro_f1, 0.75, epsilon = 1e-12);
        assert_abs_diff_eq!(s.macro_f1, (2.0 / 3.0 + 0.8) / 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s.accuracy, 0.75, epsilon = 1e-12);
    }

    #[test]
    fn micro_equals_accuracy() {
        for seed in 0..20u64 {
            let n = 50;
            let c = 6;
            let pred: Vec<usize> = (0..n)
                .map(|i| (crate::rng::draw_u64(seed, 90, 0, i) % c as u64) as usize)
                .collect();
            let truth: Vec<usize> = (0..n)
                .map(|i| (crate::rng::draw_u64(seed, 91, 0, i) % c as u64) as usize)
                .collect();
            let s = micro_macro_f1(&pred, &truth, c).unwrap();
            assert_abs_diff_eq!(s.micro_f1, s.accuracy, epsilon = 1e-12);
        }
    }

    #[test]
    fn absent_class_scores_zero_in_macro() {
        // Class 2 never appears: its F1 is 0, not skipped.
        let s = micro_macro_f1(&[0, 1], &[0, 1], 3).unwrap();
        assert_abs_diff_eq!(s.macro_f1, 2.0 / 3.0, epsilon = 1e-12);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(micro_macro_f1(&[0], &[0, 1], 2).is_err());
        assert!(micro_macro_f1(&[], &[], 2).is_err());
        assert!(micro_macro_f1(&[5], &[0], 2).is_err());
    }
}
