//! Synthetic multilingual corpora with known latent structure.
//!
//! Speaker vector = language offset + (PD ? magnitude · p : 0) + speaker
//! noise; each recording adds a small jitter on top. Noise is isotropic with
//! per-coordinate standard deviation `noise_sigma / sqrt(dim)`, so
//! `noise_sigma` is the RMS norm of the noise vector whatever the dimension.
//!
//! The target language's offset can be tilted against the pathology
//! direction `p` (cosine `-adversarial_alignment`), which puts target PD
//! speakers on the HC side of a boundary learned from the other languages.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::corpus::{
    write_manifest, write_matrix, CorpusManifest, EmbeddingMatrix, Label, RecordingRecord,
};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthSpec {
    pub languages: Vec<String>,
    /// Language whose offset is mixed with the pathology direction.
    /// Defaults to the first language.
    pub target_language: Option<String>,
    pub dim: usize,
    pub speakers_per_cell: usize,
    pub recordings_min: usize,
    pub recordings_max: usize,
    pub language_offset_norm: f64,
    pub pathology_magnitude: f64,
    pub noise_sigma: f64,
    pub adversarial_alignment: f64,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            languages: vec!["cz".into(), "de".into(), "es".into()],
            target_language: None,
            dim: 64,
            speakers_per_cell: 40,
            recordings_min: 1,
            recordings_max: 3,
            language_offset_norm: 10.0,
            pathology_magnitude: 3.0,
            noise_sigma: 1.0,
            adversarial_alignment: 0.0,
            seed: 0,
        }
    }
}

impl SynthSpec {
    pub fn target(&self) -> &str {
        self.target_language
            .as_deref()
            .unwrap_or_else(|| self.languages.first().map(String::as_str).unwrap_or(""))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.languages.is_empty() {
            return bad("at least one language is required".into());
        }
        let mut sorted = self.languages.clone();
        sorted.sort();
        sorted.dedup();
        if sorted.len() != self.languages.len() {
            return bad("language codes must be unique".into());
        }
        if !self.languages.iter().any(|l| l == self.target()) {
            return bad(format!("target language {:?} is not generated", self.target()));
        }
        if self.dim == 0 || self.speakers_per_cell == 0 {
            return bad("dim and speakers_per_cell must be positive".into());
        }
        if self.recordings_min == 0 || self.recordings_min > self.recordings_max {
            return bad(format!(
                "recordings range {}..={} is empty or starts at 0",
                self.recordings_min, self.recordings_max
            ));
        }
        if !(0.0..=1.0).contains(&self.adversarial_alignment) {
            return bad(format!(
                "adversarial_alignment {} outside [0, 1]",
                self.adversarial_alignment
            ));
        }
        for (name, v) in [
            ("language_offset_norm", self.language_offset_norm),
            ("pathology_magnitude", self.pathology_magnitude),
            ("noise_sigma", self.noise_sigma),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return bad(format!("{name} must be finite and non-negative, got {v}"));
            }
        }
        Ok(())
    }
}

/// Latent parameters of a generated corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub target_language: String,
    pub adversarial_alignment: f64,
    pub pathology_direction: Vec<f64>,
    pub pathology_magnitude: f64,
    pub language_offsets: BTreeMap<String, Vec<f64>>,
    /// Noise-bearing speaker vectors before recording jitter.
    pub speaker_vectors: BTreeMap<String, Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthCorpus {
    pub manifest: CorpusManifest,
    pub matrix: EmbeddingMatrix,
    pub ground_truth: GroundTruth,
}

impl SynthCorpus {
    /// Writes `corpus.evec`, `manifest.jsonl` and `ground_truth.json`.
    pub fn write_to(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        write_matrix(&self.matrix, dir.join("corpus.evec"))?;
        write_manifest(&self.manifest, dir.join("manifest.jsonl"))?;
        let gt = dir.join("ground_truth.json");
        let json = serde_json::to_string_pretty(&self.ground_truth)?;
        fs::write(&gt, json + "\n").map_err(|e| Error::io(gt, e))
    }
}

fn gaussian(rng: &mut ChaCha8Rng, dim: usize, scale: f64) -> Vec<f64> {
    (0..dim)
        .map(|_| rng.sample::<f64, _>(StandardNormal) * scale)
        .collect()
}

fn unit(mut v: Vec<f64>) -> Vec<f64> {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    } else if let Some(first) = v.first_mut() {
        *first = 1.0;
    }
    v
}

pub fn generate(spec: &SynthSpec) -> Result<SynthCorpus> {
    spec.validate()?;
    let d = spec.dim;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let p = unit(gaussian(&mut rng, d, 1.0));
    let target = spec.target().to_string();
    let alpha = spec.adversarial_alignment;

    let mut offsets = BTreeMap::new();
    for lang in &spec.languages {
        let u = unit(gaussian(&mut rng, d, 1.0));
        let dir = if *lang == target {
            let proj: f64 = u.iter().zip(&p).map(|(a, b)| a * b).sum();
            let perp: Vec<f64> = u.iter().zip(&p).map(|(a, b)| a - proj * b).collect();
            let perp_norm = perp.iter().map(|x| x * x).sum::<f64>().sqrt();
            let ortho = (1.0 - alpha * alpha).max(0.0).sqrt();
            if perp_norm > 1e-12 {
                perp.iter()
                    .zip(&p)
                    .map(|(q, pi)| -alpha * pi + ortho * q / perp_norm)
                    .collect()
            } else {
                p.iter().map(|pi| -pi).collect()
            }
        } else {
            u
        };
        let offset: Vec<f64> = dir.iter().map(|x| x * spec.language_offset_norm).collect();
        offsets.insert(lang.clone(), offset);
    }

    let speaker_scale = spec.noise_sigma / (d as f64).sqrt();
    let jitter_scale = 0.1 * speaker_scale;
    let mut records = Vec::new();
    let mut data: Vec<f32> = Vec::new();
    let mut speakers = BTreeMap::new();
    for lang in &spec.languages {
        let offset = &offsets[lang];
        for label in [Label::Hc, Label::Pd] {
            let shift = if label == Label::Pd { spec.pathology_magnitude } else { 0.0 };
            for idx in 0..spec.speakers_per_cell {
                let speaker_id = format!("{lang}-{}-{idx:03}", label.as_str().to_lowercase());
                let noise = gaussian(&mut rng, d, speaker_scale);
                let vector: Vec<f64> = (0..d)
                    .map(|j| offset[j] + shift * p[j] + noise[j])
                    .collect();
                let n_rec = rng.random_range(spec.recordings_min..=spec.recordings_max);
                for r in 0..n_rec {
                    let jitter = gaussian(&mut rng, d, jitter_scale);
                    let row = records.len();
                    data.extend(vector.iter().zip(&jitter).map(|(v, j)| (v + j) as f32));
                    records.push(RecordingRecord::new(
                        format!("{speaker_id}-{r}"),
                        &speaker_id,
                        lang,
                        label,
                        row,
                    ));
                }
                speakers.insert(speaker_id, vector);
            }
        }
    }

    let rows = records.len();
    Ok(SynthCorpus {
        manifest: CorpusManifest::new(records)?,
        matrix: EmbeddingMatrix::new(rows, d, data)?,
        ground_truth: GroundTruth {
            target_language: target,
            adversarial_alignment: alpha,
            pathology_direction: p,
            pathology_magnitude: spec.pathology_magnitude,
            language_offsets: offsets,
            speaker_vectors: speakers,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{aggregate_speakers, encode_matrix};

    #[test]
    fn defaults_validate_and_aggregate() {
        let c = generate(&SynthSpec::default()).unwrap();
        c.manifest.validate_against(&c.matrix).unwrap();
        let t = aggregate_speakers(&c.manifest, &c.matrix).unwrap();
        assert_eq!(t.len(), 3 * 2 * 40);
        let norm: f64 = c.ground_truth.pathology_direction.iter().map(|x| x * x).sum();
        assert!((norm.sqrt() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn same_seed_same_bytes() {
        let spec = SynthSpec { seed: 7, ..Default::default() };
        let (a, b) = (generate(&spec).unwrap(), generate(&spec).unwrap());
        assert_eq!(encode_matrix(&a.matrix).unwrap(), encode_matrix(&b.matrix).unwrap());
        assert_eq!(a.manifest.to_jsonl(), b.manifest.to_jsonl());
    }

    #[test]
    fn target_offset_alignment() {
        let spec = SynthSpec {
            adversarial_alignment: 0.8,
            ..Default::default()
        };
        let gt = generate(&spec).unwrap().ground_truth;
        let off = &gt.language_offsets["cz"];
        let n = off.iter().map(|x| x * x).sum::<f64>().sqrt();
        let cos: f64 = off.iter().zip(&gt.pathology_direction).map(|(a, b)| a * b).sum::<f64>() / n;
        assert!((n - 10.0).abs() < 1e-9);
        assert!((cos + 0.8).abs() < 1e-9);
    }

    #[test]
    fn rejects_bad_specs() {
        for spec in [
            SynthSpec { adversarial_alignment: 1.5, ..Default::default() },
            SynthSpec { noise_sigma: -1.0, ..Default::default() },
            SynthSpec { recordings_min: 4, recordings_max: 2, ..Default::default() },
            SynthSpec { target_language: Some("fr".into()), ..Default::default() },
            SynthSpec { languages: vec!["a".into(), "a".into()], ..Default::default() },
        ] {
            assert!(generate(&spec).is_err(), "{spec:?}");
        }
    }
}
