use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Confusion counts with PD as the positive class. A metric whose
/// denominator is zero is `None` rather than NaN.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSet {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub sensitivity: Option<f64>,
    pub specificity: Option<f64>,
    pub f1: Option<f64>,
}

fn ratio(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

impl MetricSet {
    pub fn from_counts(tp: usize, fp: usize, tn: usize, fn_: usize) -> Self {
        Self {
            tp,
            fp,
            tn,
            fn_,
            sensitivity: ratio(tp, tp + fn_),
            specificity: ratio(tn, tn + fp),
            f1: ratio(2 * tp, 2 * tp + fp + fn_),
        }
    }
}

pub fn compute_metrics(preds: &[bool], labels: &[bool]) -> Result<MetricSet> {
    if preds.len() != labels.len() {
        return Err(Error::InvalidInput(format!(
            "{} predictions but {} labels",
            preds.len(),
            labels.len()
        )));
    }
    if preds.is_empty() {
        return Err(Error::InvalidInput("no predictions to score".into()));
    }
    let (mut tp, mut fp, mut tn, mut fn_) = (0, 0, 0, 0);
    for (&p, &l) in preds.iter().zip(labels) {
        match (p, l) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, false) => tn += 1,
            (false, true) => fn_ += 1,
        }
    }
    Ok(MetricSet::from_counts(tp, fp, tn, fn_))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mixed_case() {
        // TP=3 FN=1 TN=2 FP=2
        let preds = [true, true, true, false, false, false, true, true];
        let labels = [true, true, true, true, false, false, false, false];
        let m = compute_metrics(&preds, &labels).unwrap();
        assert_eq!((m.tp, m.fn_, m.tn, m.fp), (3, 1, 2, 2));
        assert_eq!(m.sensitivity, Some(0.75));
        assert_eq!(m.specificity, Some(0.5));
        assert_eq!(m.f1, Some(6.0 / 9.0));
    }

    #[test]
    fn perfect() {
        let v = [true, false, true, false];
        let m = compute_metrics(&v, &v).unwrap();
        assert_eq!((m.sensitivity, m.specificity, m.f1), (Some(1.0), Some(1.0), Some(1.0)));
    }

    #[test]
    fn no_negatives() {
        let m = compute_metrics(&[true, false], &[true, true]).unwrap();
        assert_eq!(m.specificity, None);
        assert_eq!(m.sensitivity, Some(0.5));
        assert_eq!(m.f1, Some(2.0 / 3.0));
    }

    #[test]
    fn length_mismatch() {
        assert!(compute_metrics(&[true], &[true, false]).is_err());
        assert!(compute_metrics(&[], &[]).is_err());
    }
}
