//! Linear classifiers trained from scratch: an L2-regularized logistic
//! regression used as the PD detector, a one-vs-rest hinge-loss classifier
//! used as the language probe, and the z-normalizer feeding the probe.

mod hinge;
mod logistic;
mod normalizer;

pub use hinge::{predict_class, train_ovr_hinge, HingeParams, MultiClassLinearModel};
pub use logistic::{
    logistic_gradient, logistic_objective, predict_proba, sigmoid, train_logistic,
    train_logistic_with_history, LogisticParams,
};
pub use normalizer::{fit_normalizer, Normalizer, DEFAULT_EPSILON};

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    Logistic,
    Hinge,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelMeta {
    pub loss_kind: LossKind,
    /// λ for the logistic model, C for the hinge model.
    pub reg_strength: f64,
    pub iterations_run: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub meta: ModelMeta,
}

impl LinearModel {
    /// `w·x + b`
    pub fn score(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.weights.len(), x.len())?;
        Ok(dot(&self.weights, x) + self.bias)
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    /// Same model with weights and bias negated.
    pub fn negated(&self) -> Self {
        Self {
            weights: self.weights.iter().map(|w| -w).collect(),
            bias: -self.bias,
            meta: self.meta.clone(),
        }
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Widens `f32` embeddings to the `f64` rows the trainers consume.
pub fn to_f64_rows<R: AsRef<[f32]>>(rows: &[R]) -> Vec<Vec<f64>> {
    rows.iter()
        .map(|r| r.as_ref().iter().map(|v| f64::from(*v)).collect())
        .collect()
}
