use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdChoice {
    pub threshold: f64,
    /// Whether the sensitivity floor was met on the validation set.
    pub feasible: bool,
    pub sensitivity: f64,
    pub specificity: f64,
}

/// Picks a decision threshold (predict PD when `prob >= threshold`) from the
/// distinct validation probabilities.
///
/// Among thresholds reaching `min_sensitivity`, the one with the highest
/// specificity wins, ties going to the higher sensitivity (the smaller
/// threshold). If none qualifies, the most sensitive threshold is returned
/// (ties to the higher specificity) with `feasible = false`.
pub fn select_threshold(
    val_probs: &[f64],
    val_labels: &[bool],
    min_sensitivity: f64,
) -> Result<ThresholdChoice> {
    if val_probs.len() != val_labels.len() {
        return Err(Error::InvalidInput(format!(
            "{} probabilities but {} labels",
            val_probs.len(),
            val_labels.len()
        )));
    }
    if val_probs.iter().any(|p| !p.is_finite()) {
        return Err(Error::InvalidInput("non-finite validation probability".into()));
    }
    let positives = val_labels.iter().filter(|&&l| l).count();
    let negatives = val_labels.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(Error::InvalidInput(
            "threshold selection needs both classes in the validation set".into(),
        ));
    }

    let mut order: Vec<(f64, bool)> = val_probs.iter().copied().zip(val_labels.iter().copied()).collect();
    order.sort_by(|a, b| b.0.total_cmp(&a.0));

    let mut best_feasible: Option<ThresholdChoice> = None;
    let mut best_fallback: Option<ThresholdChoice> = None;
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    // Descending sweep over distinct values. Two candidates never share both
    // sensitivity and specificity, and at equal specificity the later
    // (smaller) one is strictly more sensitive.
    while i < order.len() {
        let t = order[i].0;
        while i < order.len() && order[i].0 == t {
            if order[i].1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        let fn_ = positives - tp;
        let tn = negatives - fp;
        let sens = tp as f64 / (tp + fn_) as f64;
        let spec = tn as f64 / (tn + fp) as f64;
        let cand = ThresholdChoice {
            threshold: t,
            feasible: sens >= min_sensitivity,
            sensitivity: sens,
            specificity: spec,
        };
        if cand.feasible {
            if best_feasible.as_ref().is_none_or(|b| spec >= b.specificity) {
                best_feasible = Some(cand);
            }
        } else if best_fallback.as_ref().is_none_or(|b| {
            sens > b.sensitivity || (sens == b.sensitivity && spec > b.specificity)
        }) {
            best_fallback = Some(cand);
        }
    }
    Ok(best_feasible
        .or(best_fallback)
        .expect("at least one candidate exists"))
}
