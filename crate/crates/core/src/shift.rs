//! Centroid-based language shift.
//!
//! Each language gets a centroid estimated from healthy-control speakers of
//! the training set only. A source-language vector is moved into the target
//! language by `x - mu_src + mu_tgt`. Estimation is HC-only and application
//! is label-agnostic; they are kept as two separate steps.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::{Label, SpeakerTable};
use crate::error::{check_dim, Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Centroid {
    pub vector: Vec<f32>,
    /// Number of training HC speakers the mean was taken over.
    pub hc_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CentroidSet {
    pub dim: usize,
    pub centroids: BTreeMap<String, Centroid>,
}

impl CentroidSet {
    pub fn get(&self, language: &str) -> Result<&Centroid> {
        self.centroids
            .get(language)
            .ok_or_else(|| Error::MissingCentroid(language.to_string()))
    }

    pub fn languages(&self) -> impl Iterator<Item = &str> {
        self.centroids.keys().map(String::as_str)
    }

    /// Short content hash, used to tag shifted tables with their provenance.
    pub fn id(&self) -> String {
        let json = serde_json::to_vec(self).expect("centroid set serializes");
        let digest = Sha256::digest(&json);
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Per-language mean of HC speakers whose id is in `train_mask`.
///
/// Every language present in `table` must have at least one masked HC
/// speaker. PD entries and entries outside the mask are never read.
pub fn estimate_centroids(
    table: &SpeakerTable,
    train_mask: &BTreeSet<String>,
) -> Result<CentroidSet> {
    let dim = table.dim();
    let mut sums: BTreeMap<&str, (Vec<f64>, usize)> = BTreeMap::new();
    for e in table.entries() {
        let slot = sums.entry(&e.language).or_insert_with(|| (vec![0.0; dim], 0));
        if e.label != Label::Hc || !train_mask.contains(&e.speaker_id) {
            continue;
        }
        for (s, v) in slot.0.iter_mut().zip(&e.vector) {
            *s += f64::from(*v);
        }
        slot.1 += 1;
    }
    let mut centroids = BTreeMap::new();
    for (lang, (sum, n)) in sums {
        if n == 0 {
            return Err(Error::MissingHc(lang.to_string()));
        }
        let vector = sum.iter().map(|s| (s / n as f64) as f32).collect();
        centroids.insert(lang.to_string(), Centroid { vector, hc_count: n });
    }
    Ok(CentroidSet { dim, centroids })
}

fn offset(mu_src: &[f32], mu_tgt: &[f32]) -> Vec<f64> {
    mu_src
        .iter()
        .zip(mu_tgt)
        .map(|(s, t)| f64::from(*t) - f64::from(*s))
        .collect()
}

fn add_offset(x: &[f32], delta: &[f64]) -> Vec<f32> {
    x.iter()
        .zip(delta)
        .map(|(v, d)| (f64::from(*v) + d) as f32)
        .collect()
}

/// `x - mu_src + mu_tgt`. The offset is formed first, so equal centroids
/// return `x` bit-for-bit.
pub fn shift_vector(x: &[f32], mu_src: &[f32], mu_tgt: &[f32]) -> Result<Vec<f32>> {
    check_dim(x.len(), mu_src.len())?;
    check_dim(x.len(), mu_tgt.len())?;
    Ok(add_offset(x, &offset(mu_src, mu_tgt)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShiftedTable {
    pub table: SpeakerTable,
    /// Language each entry came from, aligned with `table.entries()`.
    pub source_languages: Vec<String>,
    pub target_language: String,
    pub centroid_set_id: String,
}

/// Moves every non-target entry (HC and PD alike) into `target`; entries
/// already in the target language are copied unchanged. Entries keep their
/// original `language` field; the shift is recorded in the provenance.
pub fn apply_language_shift(
    table: &SpeakerTable,
    centroids: &CentroidSet,
    target: &str,
) -> Result<ShiftedTable> {
    check_dim(table.dim(), centroids.dim)?;
    let mu_tgt = &centroids.get(target)?.vector;
    let mut offsets: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for lang in table.languages() {
        let mu_src = &centroids.get(&lang)?.vector;
        if lang != target {
            let delta = offset(mu_src, mu_tgt);
            offsets.insert(lang, delta);
        }
    }
    let entries = table
        .entries()
        .iter()
        .map(|e| {
            let mut out = e.clone();
            if let Some(delta) = offsets.get(e.language.as_str()) {
                out.vector = add_offset(&e.vector, delta);
            }
            out
        })
        .collect();
    Ok(ShiftedTable {
        table: SpeakerTable::from_sorted_unchecked(table.dim(), entries),
        source_languages: table.entries().iter().map(|e| e.language.clone()).collect(),
        target_language: target.to_string(),
        centroid_set_id: centroids.id(),
    })
}

pub fn centroid_distance(mu_a: &[f32], mu_b: &[f32]) -> Result<f64> {
    check_dim(mu_a.len(), mu_b.len())?;
    Ok(mu_a
        .iter()
        .zip(mu_b)
        .map(|(a, b)| {
            let d = f64::from(*a) - f64::from(*b);
            d * d
        })
        .sum::<f64>()
        .sqrt())
}

/// Symmetric pairwise centroid distances, languages in sorted order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceMatrix {
    pub languages: Vec<String>,
    pub distances: Vec<Vec<f64>>,
}

impl DistanceMatrix {
    pub fn get(&self, a: &str, b: &str) -> Option<f64> {
        let i = self.languages.iter().position(|l| l == a)?;
        let j = self.languages.iter().position(|l| l == b)?;
        Some(self.distances[i][j])
    }

    /// Upper-triangle pairs `(a, b, distance)` with `a < b`.
    pub fn pairs(&self) -> Vec<(&str, &str, f64)> {
        let n = self.languages.len();
        let mut out = Vec::with_capacity(n * (n - 1) / 2);
        for i in 0..n {
            for j in i + 1..n {
                out.push((
                    self.languages[i].as_str(),
                    self.languages[j].as_str(),
                    self.distances[i][j],
                ));
            }
        }
        out
    }
}

pub fn centroid_distance_matrix(centroids: &CentroidSet) -> Result<DistanceMatrix> {
    if centroids.centroids.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "need at least 2 languages for distances, got {}",
            centroids.centroids.len()
        )));
    }
    let languages: Vec<String> = centroids.centroids.keys().cloned().collect();
    let vecs: Vec<&[f32]> = centroids
        .centroids
        .values()
        .map(|c| c.vector.as_slice())
        .collect();
    let n = languages.len();
    let mut distances = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let d = centroid_distance(vecs[i], vecs[j])?;
            distances[i][j] = d;
            distances[j][i] = d;
        }
    }
    Ok(DistanceMatrix {
        languages,
        distances,
    })
}
