//! One-vs-rest linear SVM (L1 hinge loss) trained by dual coordinate descent.
//!
//! Each binary sub-problem minimizes ½‖w‖² + C·Σ max(0, 1 − sᵢ(w·xᵢ + b)).
//! The intercept is folded in as an extra constant feature of value 1, so it
//! carries the same unit penalty as the weights. Coordinates are visited in
//! fixed order, which keeps training bit-reproducible.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{dot, LinearModel, LossKind, ModelMeta};
use crate::error::{check_dim, Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HingeParams {
    pub c: f64,
    /// Epoch budget (one epoch = one pass over all samples).
    pub max_iter: usize,
    /// Stop once the projected-gradient spread falls below this.
    pub tol: f64,
}

impl Default for HingeParams {
    fn default() -> Self {
        Self {
            c: 1.0,
            max_iter: 2000,
            tol: 1e-4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiClassLinearModel {
    classes: Vec<String>,
    models: Vec<LinearModel>,
}

impl MultiClassLinearModel {
    pub fn new(classes: Vec<String>, models: Vec<LinearModel>) -> Result<Self> {
        if classes.len() != models.len() || classes.is_empty() {
            return Err(Error::InvalidInput(format!(
                "{} classes but {} sub-models",
                classes.len(),
                models.len()
            )));
        }
        let d = models[0].dim();
        for m in &models {
            check_dim(d, m.dim())?;
        }
        Ok(Self { classes, models })
    }

    pub fn classes(&self) -> &[String] {
        &self.classes
    }

    pub fn models(&self) -> &[LinearModel] {
        &self.models
    }

    pub fn decision_scores(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.models.iter().map(|m| m.score(x)).collect()
    }
}

/// Argmax of the per-class scores; exact ties go to the lowest class index.
pub fn predict_class<'m>(model: &'m MultiClassLinearModel, x: &[f64]) -> Result<&'m str> {
    let scores = model.decision_scores(x)?;
    let mut best = 0;
    for (k, s) in scores.iter().enumerate().skip(1) {
        if *s > scores[best] {
            best = k;
        }
    }
    Ok(&model.classes[best])
}

/// Classes are ordered lexicographically.
pub fn train_ovr_hinge<S: AsRef<str>>(
    x: &[Vec<f64>],
    y: &[S],
    params: &HingeParams,
) -> Result<MultiClassLinearModel> {
    if x.len() != y.len() {
        return Err(Error::InvalidInput(format!(
            "{} rows but {} labels",
            x.len(),
            y.len()
        )));
    }
    if params.c <= 0.0 {
        return Err(Error::InvalidConfig("C must be positive".into()));
    }
    let classes: Vec<String> = y
        .iter()
        .map(|s| s.as_ref().to_string())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    if classes.len() < 2 {
        return Err(Error::InvalidInput(
            "one-vs-rest training needs at least 2 classes".into(),
        ));
    }
    let d = x[0].len();
    for row in x {
        check_dim(d, row.len())?;
    }
    let models = classes
        .iter()
        .map(|k| {
            let signs: Vec<f64> = y
                .iter()
                .map(|s| if s.as_ref() == k { 1.0 } else { -1.0 })
                .collect();
            train_binary(x, &signs, params)
        })
        .collect();
    MultiClassLinearModel::new(classes, models)
}

fn train_binary(x: &[Vec<f64>], s: &[f64], params: &HingeParams) -> LinearModel {
    let d = x[0].len();
    let c = params.c;
    // w[d] is the intercept (constant feature 1).
    let mut w = vec![0.0; d + 1];
    let mut alpha = vec![0.0; x.len()];
    let qii: Vec<f64> = x.iter().map(|r| dot(r, r) + 1.0).collect();

    let mut epochs = 0;
    let mut converged = false;
    while epochs < params.max_iter {
        epochs += 1;
        let (mut pg_max, mut pg_min) = (f64::NEG_INFINITY, f64::INFINITY);
        for (i, row) in x.iter().enumerate() {
            let g = s[i] * (dot(&w[..d], row) + w[d]) - 1.0;
            let pg = if alpha[i] <= 0.0 {
                g.min(0.0)
            } else if alpha[i] >= c {
                g.max(0.0)
            } else {
                g
            };
            pg_max = pg_max.max(pg);
            pg_min = pg_min.min(pg);
            if pg != 0.0 {
                let old = alpha[i];
                alpha[i] = (old - g / qii[i]).clamp(0.0, c);
                let step = (alpha[i] - old) * s[i];
                for (wj, v) in w[..d].iter_mut().zip(row) {
                    *wj += step * v;
                }
                w[d] += step;
            }
        }
        if pg_max - pg_min < params.tol {
            converged = true;
            break;
        }
    }

    let bias = w.pop().expect("intercept slot");
    LinearModel {
        weights: w,
        bias,
        meta: ModelMeta {
            loss_kind: LossKind::Hinge,
            reg_strength: c,
            iterations_run: epochs,
            converged,
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fixed(weights: Vec<f64>, bias: f64) -> LinearModel {
        LinearModel {
            weights,
            bias,
            meta: ModelMeta {
                loss_kind: LossKind::Hinge,
                reg_strength: 1.0,
                iterations_run: 0,
                converged: true,
            },
        }
    }

    #[test]
    fn separable_1d() {
        let x = vec![vec![-2.0], vec![-2.0], vec![2.0], vec![2.0]];
        let y = ["a", "a", "b", "b"];
        let m = train_ovr_hinge(&x, &y, &HingeParams::default()).unwrap();
        for (row, label) in x.iter().zip(y) {
            assert_eq!(predict_class(&m, row).unwrap(), label);
        }
        assert!(m.models().iter().all(|sub| sub.meta.converged));
    }

    #[test]
    fn argmax_and_ties() {
        let m = MultiClassLinearModel::new(
            vec!["a".into(), "b".into()],
            vec![fixed(vec![0.0], 1.0), fixed(vec![0.0], 0.2)],
        )
        .unwrap();
        assert_eq!(predict_class(&m, &[3.0]).unwrap(), "a");

        let tie = |order: [&str; 2]| {
            MultiClassLinearModel::new(
                order.iter().map(|s| s.to_string()).collect(),
                vec![fixed(vec![0.0], 0.5), fixed(vec![0.0], 0.5)],
            )
            .unwrap()
        };
        assert_eq!(predict_class(&tie(["a", "b"]), &[1.0]).unwrap(), "a");
        assert_eq!(predict_class(&tie(["b", "a"]), &[1.0]).unwrap(), "b");
    }

    #[test]
    fn bias_offset_invariance() {
        let m = MultiClassLinearModel::new(
            vec!["x".into(), "y".into(), "z".into()],
            vec![
                fixed(vec![1.0, -1.0], 0.1),
                fixed(vec![-0.5, 2.0], -0.3),
                fixed(vec![0.2, 0.2], 0.0),
            ],
        )
        .unwrap();
        let shifted = MultiClassLinearModel::new(
            m.classes().to_vec(),
            m.models()
                .iter()
                .map(|s| fixed(s.weights.clone(), s.bias + 7.5))
                .collect(),
        )
        .unwrap();
        for p in [[0.0, 0.0], [1.0, 3.0], [-2.0, 0.5], [4.0, -4.0]] {
            assert_eq!(predict_class(&m, &p).unwrap(), predict_class(&shifted, &p).unwrap());
        }
    }

    #[test]
    fn single_class_rejected() {
        let x = vec![vec![0.0], vec![1.0]];
        assert!(train_ovr_hinge(&x, &["a", "a"], &HingeParams::default()).is_err());
    }

    #[test]
    fn dimension_mismatch_on_predict() {
        let x = vec![vec![-1.0], vec![1.0]];
        let m = train_ovr_hinge(&x, &["a", "b"], &HingeParams::default()).unwrap();
        assert!(predict_class(&m, &[1.0, 2.0]).is_err());
    }
}
