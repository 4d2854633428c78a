//! Binary logistic regression.
//!
//! Objective: mean logistic loss + (λ/2)·‖w‖², bias unregularized. Minimized
//! by full-batch L-BFGS with Armijo backtracking, so every accepted step
//! decreases the objective. Convergence means max |gradient| < tol.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::{dot, LinearModel, LossKind, ModelMeta};
use crate::error::{check_dim, Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticParams {
    pub reg_strength: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for LogisticParams {
    fn default() -> Self {
        Self {
            reg_strength: 1.0,
            tol: 1e-6,
            max_iter: 500,
        }
    }
}

const HISTORY: usize = 10;
const ARMIJO_C1: f64 = 1e-4;
const MIN_STEP: f64 = 1e-20;

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// ln(1 + e^z) without overflow.
fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

fn check_problem(x: &[Vec<f64>], y: &[bool], weights: &[f64]) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::InvalidInput(format!(
            "{} rows but {} labels",
            x.len(),
            y.len()
        )));
    }
    for row in x {
        check_dim(weights.len(), row.len())?;
    }
    Ok(())
}

/// Regularized mean logistic loss at `(weights, bias)`.
pub fn logistic_objective(
    x: &[Vec<f64>],
    y: &[bool],
    weights: &[f64],
    bias: f64,
    reg_strength: f64,
) -> Result<f64> {
    check_problem(x, y, weights)?;
    Ok(objective(x, y, weights, bias, reg_strength))
}

/// Gradient of [`logistic_objective`]: `(d/dw, d/db)`.
pub fn logistic_gradient(
    x: &[Vec<f64>],
    y: &[bool],
    weights: &[f64],
    bias: f64,
    reg_strength: f64,
) -> Result<(Vec<f64>, f64)> {
    check_problem(x, y, weights)?;
    let mut theta = weights.to_vec();
    theta.push(bias);
    let (_, g) = value_and_grad(x, y, &theta, reg_strength);
    let gb = g[weights.len()];
    Ok((g[..weights.len()].to_vec(), gb))
}

fn objective(x: &[Vec<f64>], y: &[bool], w: &[f64], b: f64, lambda: f64) -> f64 {
    let n = x.len() as f64;
    let loss: f64 = x
        .iter()
        .zip(y)
        .map(|(row, &yi)| {
            let z = dot(w, row) + b;
            softplus(z) - if yi { z } else { 0.0 }
        })
        .sum();
    loss / n + 0.5 * lambda * dot(w, w)
}

/// `theta` is `[w..., b]`.
fn value_and_grad(x: &[Vec<f64>], y: &[bool], theta: &[f64], lambda: f64) -> (f64, Vec<f64>) {
    let d = theta.len() - 1;
    let (w, b) = (&theta[..d], theta[d]);
    let n = x.len() as f64;
    let mut grad = vec![0.0; d + 1];
    let mut loss = 0.0;
    for (row, &yi) in x.iter().zip(y) {
        let z = dot(w, row) + b;
        let t = if yi { 1.0 } else { 0.0 };
        loss += softplus(z) - t * z;
        let r = sigmoid(z) - t;
        for (g, v) in grad[..d].iter_mut().zip(row) {
            *g += r * v;
        }
        grad[d] += r;
    }
    for g in grad.iter_mut() {
        *g /= n;
    }
    for (g, wj) in grad[..d].iter_mut().zip(w) {
        *g += lambda * wj;
    }
    (loss / n + 0.5 * lambda * dot(w, w), grad)
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Two-loop recursion: returns the quasi-Newton descent direction.
fn lbfgs_direction(grad: &[f64], pairs: &VecDeque<(Vec<f64>, Vec<f64>, f64)>) -> Vec<f64> {
    let mut q = grad.to_vec();
    let mut alphas = Vec::with_capacity(pairs.len());
    for (s, yv, rho) in pairs.iter().rev() {
        let a = rho * dot(s, &q);
        for (qi, yi) in q.iter_mut().zip(yv) {
            *qi -= a * yi;
        }
        alphas.push(a);
    }
    if let Some((s, yv, _)) = pairs.back() {
        let gamma = dot(s, yv) / dot(yv, yv);
        for qi in q.iter_mut() {
            *qi *= gamma;
        }
    }
    for ((s, yv, rho), a) in pairs.iter().zip(alphas.iter().rev()) {
        let b = rho * dot(yv, &q);
        for (qi, si) in q.iter_mut().zip(s) {
            *qi += (a - b) * si;
        }
    }
    q.iter_mut().for_each(|v| *v = -*v);
    q
}

pub fn train_logistic(x: &[Vec<f64>], y: &[bool], params: &LogisticParams) -> Result<LinearModel> {
    train_logistic_with_history(x, y, params).map(|(m, _)| m)
}

/// Like [`train_logistic`], also returning the objective value at the start
/// and after every accepted iteration.
pub fn train_logistic_with_history(
    x: &[Vec<f64>],
    y: &[bool],
    params: &LogisticParams,
) -> Result<(LinearModel, Vec<f64>)> {
    if params.reg_strength <= 0.0 || params.tol <= 0.0 {
        return Err(Error::InvalidConfig(
            "reg_strength and tol must be positive".into(),
        ));
    }
    if x.len() < 2 {
        return Err(Error::InvalidInput(
            "logistic regression needs at least 2 samples".into(),
        ));
    }
    let d = x[0].len();
    check_problem(x, y, &vec![0.0; d])?;
    if y.iter().all(|&v| v) || y.iter().all(|&v| !v) {
        return Err(Error::InvalidInput(
            "logistic regression needs both classes present".into(),
        ));
    }
    for (i, row) in x.iter().enumerate() {
        if let Some(j) = row.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { row: i, col: j });
        }
    }

    let lambda = params.reg_strength;
    let mut theta = vec![0.0; d + 1];
    let (mut f, mut g) = value_and_grad(x, y, &theta, lambda);
    let mut history = vec![f];
    let mut pairs: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::with_capacity(HISTORY);
    let mut iterations = 0;
    let mut converged = max_abs(&g) < params.tol;

    while !converged && iterations < params.max_iter {
        let mut dir = lbfgs_direction(&g, &pairs);
        let mut slope = dot(&g, &dir);
        if !(slope < 0.0) {
            pairs.clear();
            dir = g.iter().map(|v| -v).collect();
            slope = -dot(&g, &g);
        }
        let mut step = if pairs.is_empty() {
            (1.0 / dot(&g, &g).sqrt()).min(1.0)
        } else {
            1.0
        };
        let accepted = loop {
            let trial: Vec<f64> = theta.iter().zip(&dir).map(|(t, p)| t + step * p).collect();
            let (ft, gt) = value_and_grad(x, y, &trial, lambda);
            if ft <= f + ARMIJO_C1 * step * slope {
                break Some((trial, ft, gt));
            }
            step *= 0.5;
            if step < MIN_STEP {
                break None;
            }
        };
        let Some((next, f_next, g_next)) = accepted else {
            break;
        };
        let s: Vec<f64> = next.iter().zip(&theta).map(|(a, b)| a - b).collect();
        let yv: Vec<f64> = g_next.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &yv);
        if sy > 1e-12 {
            if pairs.len() == HISTORY {
                pairs.pop_front();
            }
            pairs.push_back((s, yv, 1.0 / sy));
        }
        theta = next;
        f = f_next;
        g = g_next;
        iterations += 1;
        history.push(f);
        converged = max_abs(&g) < params.tol;
    }

    let bias = theta.pop().expect("theta has a bias slot");
    Ok((
        LinearModel {
            weights: theta,
            bias,
            meta: ModelMeta {
                loss_kind: LossKind::Logistic,
                reg_strength: lambda,
                iterations_run: iterations,
                converged,
            },
        },
        history,
    ))
}

/// `sigmoid(w·x + b)`
pub fn predict_proba(model: &LinearModel, x: &[f64]) -> Result<f64> {
    model.score(x).map(sigmoid)
}
