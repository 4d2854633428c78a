use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};

pub const DEFAULT_EPSILON: f64 = 1e-8;

/// Per-dimension z-scoring: `(x - mean) / (std + epsilon)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Normalizer {
    pub mean: Vec<f64>,
    /// Population standard deviation.
    pub std: Vec<f64>,
    pub epsilon: f64,
}

impl Normalizer {
    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.mean.len(), x.len())?;
        Ok(x.iter()
            .zip(self.mean.iter().zip(&self.std))
            .map(|(v, (m, s))| (v - m) / (s + self.epsilon))
            .collect())
    }

    pub fn apply_all(&self, rows: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        rows.iter().map(|r| self.apply(r)).collect()
    }
}

pub fn fit_normalizer(vectors: &[Vec<f64>]) -> Result<Normalizer> {
    let Some(first) = vectors.first() else {
        return Err(Error::InvalidInput("cannot fit a normalizer on zero vectors".into()));
    };
    let d = first.len();
    let n = vectors.len() as f64;
    let mut mean = vec![0.0; d];
    for v in vectors {
        check_dim(d, v.len())?;
        for (m, x) in mean.iter_mut().zip(v) {
            *m += x;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let mut var = vec![0.0; d];
    for v in vectors {
        for ((s, x), m) in var.iter_mut().zip(v).zip(&mean) {
            *s += (x - m) * (x - m);
        }
    }
    let std = var.into_iter().map(|s| (s / n).sqrt()).collect();
    Ok(Normalizer {
        mean,
        std,
        epsilon: DEFAULT_EPSILON,
    })
}
