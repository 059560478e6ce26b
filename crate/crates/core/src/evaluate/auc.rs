//! Area under the ROC curve via the Mann-Whitney pair formulation.

use crate::error::{Error, Result};

/// AUC of `(score, is_positive)` pairs: the fraction of (positive, negative)
/// pairs ranked concordantly, ties counted half. Needs both labels present.
pub fn auc(scores: &[(f64, bool)]) -> Result<f64> {
    let positives: Vec<f64> = scores.iter().filter(|(_, y)| *y).map(|(s, _)| *s).collect();
    let negatives: Vec<f64> = scores
        .iter()
        .filter(|(_, y)| !*y)
        .map(|(s, _)| *s)
        .collect();
    if positives.is_empty() || negatives.is_empty() {
        return Err(Error::Degenerate(format!(
            "auc needs both labels, got {} positives and {} negatives",
            positives.len(),
            negatives.len()
        )));
    }
    let mut concordant = 0.0;
    for &p in &positives {
        for &n in &negatives {
            if p > n {
                concordant += 1.0;
            } else if p == n {
                concordant += 0.5;
            }
        }
    }
    Ok(concordant / (positives.len() as f64 * negatives.len() as f64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn perfect_separation() {
        let scores = [(0.9, true), (0.8, true), (0.1, false), (0.2, false)];
        assert_abs_diff_eq!(auc(&scores).unwrap(), 1.0);
    }

    #[test]
    fn full_tie_is_half() {
        let scores = [(0.5, true), (0.5, false)];
        assert_abs_diff_eq!(auc(&scores).unwrap(), 0.5);
    }

    #[test]
    fn three_of_four_concordant() {
        let scores = [(0.8, true), (0.4, true), (0.6, false), (0.2, false)];
        assert_abs_diff_eq!(auc(&scores).unwrap(), 0.75);
    }

    #[test]
    fn single_class_errors() {
        assert!(auc(&[(0.5, true), (0.9, true)]).is_err());
        assert!(auc(&[]).is_err());
    }

    proptest! {
        #[test]
        fn label_flip_complements(
            scores in proptest::collection::vec((0u32..1000, proptest::bool::ANY), 2..40)
        ) {
            // distinct scores only, so no ties
            let mut seen = std::collections::HashSet::new();
            let scores: Vec<(f64, bool)> = scores
                .into_iter()
                .filter(|(s, _)| seen.insert(*s))
                .map(|(s, y)| (s as f64, y))
                .collect();
            let pos = scores.iter().filter(|(_, y)| *y).count();
            prop_assume!(pos > 0 && pos < scores.len());
            let flipped: Vec<(f64, bool)> = scores.iter().map(|&(s, y)| (s, !y)).collect();
            let a = auc(&scores).unwrap();
            let b = auc(&flipped).unwrap();
            prop_assert!((a + b - 1.0).abs() < 1e-12);
        }

        #[test]
        fn invariant_under_increasing_transform(
            scores in proptest::collection::vec((0.0f64..1.0, proptest::bool::ANY), 2..40)
        ) {
            let pos = scores.iter().filter(|(_, y)| *y).count();
            prop_assume!(pos > 0 && pos < scores.len());
            let transformed: Vec<(f64, bool)> = scores
                .iter()
                .map(|&(s, y)| ((3.0 * s + 1.0).exp(), y))
                .collect();
            let a = auc(&scores).unwrap();
            let b = auc(&transformed).unwrap();
            prop_assert!((a - b).abs() < 1e-12);
        }
    }
}
