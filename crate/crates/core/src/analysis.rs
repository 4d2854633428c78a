//! Representation analyses: a language-identity probe trained on HC speakers
//! and scored on PD speakers, and a 2-D PCA projection for plotting.

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::corpus::{Label, SpeakerTable};
use crate::error::{Error, Result};
use crate::linear::{
    fit_normalizer, predict_class, to_f64_rows, train_ovr_hinge, HingeParams,
    MultiClassLinearModel, Normalizer,
};
use crate::shift::{apply_language_shift, CentroidSet};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeResult {
    /// `None` when the probe ran on unshifted vectors.
    pub shift_target: Option<String>,
    pub accuracy: f64,
    pub chance_level: f64,
    pub n_train: usize,
    pub n_eval: usize,
    /// true language → predicted language → count, over PD speakers.
    pub confusion: BTreeMap<String, BTreeMap<String, usize>>,
}

/// A probe fitted on HC speakers only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LanguageProbe {
    pub normalizer: Normalizer,
    pub model: MultiClassLinearModel,
}

impl LanguageProbe {
    pub fn predict(&self, x: &[f32]) -> Result<&str> {
        let v: Vec<f64> = x.iter().map(|a| f64::from(*a)).collect();
        predict_class(&self.model, &self.normalizer.apply(&v)?)
    }
}

/// Fits the z-normalizer and the one-vs-rest SVM on the HC entries of
/// `table`, with language as the class.
pub fn train_language_probe(table: &SpeakerTable, params: &HingeParams) -> Result<LanguageProbe> {
    let hc: Vec<_> = table.entries().iter().filter(|e| e.label == Label::Hc).collect();
    let rows: Vec<&[f32]> = hc.iter().map(|e| e.vector.as_slice()).collect();
    let rows = to_f64_rows(&rows);
    let normalizer = fit_normalizer(&rows)?;
    let rows = normalizer.apply_all(&rows)?;
    let langs: Vec<&str> = hc.iter().map(|e| e.language.as_str()).collect();
    let model = train_ovr_hinge(&rows, &langs, params)?;
    Ok(LanguageProbe { normalizer, model })
}

fn check_probe_table(table: &SpeakerTable) -> Result<()> {
    let langs = table.languages();
    if langs.len() < 2 {
        return Err(Error::InvalidInput(
            "language probe needs at least 2 languages".into(),
        ));
    }
    for lang in &langs {
        for label in [Label::Hc, Label::Pd] {
            if !table
                .entries()
                .iter()
                .any(|e| &e.language == lang && e.label == label)
            {
                return Err(Error::InvalidInput(format!(
                    "language {lang:?} has no {label} speakers"
                )));
            }
        }
    }
    Ok(())
}

/// Optionally shifts every entry toward `shift_target`, trains the probe on
/// HC and reports language-identification accuracy on PD.
pub fn run_language_probe(
    table: &SpeakerTable,
    centroids: &CentroidSet,
    shift_target: Option<&str>,
    params: &HingeParams,
) -> Result<ProbeResult> {
    check_probe_table(table)?;
    let shifted;
    let table = match shift_target {
        Some(t) => {
            shifted = apply_language_shift(table, centroids, t)?;
            &shifted.table
        }
        None => table,
    };
    let probe = train_language_probe(table, params)?;
    let classes: BTreeSet<&str> = probe.model.classes().iter().map(String::as_str).collect();

    let mut confusion: BTreeMap<String, BTreeMap<String, usize>> = BTreeMap::new();
    let (mut correct, mut total) = (0, 0);
    for e in table.entries().iter().filter(|e| e.label == Label::Pd) {
        let pred = probe.predict(&e.vector)?;
        *confusion
            .entry(e.language.clone())
            .or_default()
            .entry(pred.to_string())
            .or_default() += 1;
        correct += usize::from(pred == e.language);
        total += 1;
    }
    Ok(ProbeResult {
        shift_target: shift_target.map(str::to_string),
        accuracy: correct as f64 / total as f64,
        chance_level: 1.0 / classes.len() as f64,
        n_train: table.entries().iter().filter(|e| e.label == Label::Hc).count(),
        n_eval: total,
        confusion,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectedPoint {
    pub speaker_id: String,
    pub language: String,
    pub label: Label,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Projection {
    pub points: Vec<ProjectedPoint>,
    /// Fraction of total variance captured by each component.
    pub explained_variance: [f64; 2],
    pub mean: Vec<f64>,
    pub components: [Vec<f64>; 2],
}

impl Projection {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("speaker_id,language,label,x,y\n");
        for p in &self.points {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                p.speaker_id, p.language, p.label, p.x, p.y
            ));
        }
        out
    }
}

/// Projects mean-centered entries onto the top two principal directions.
/// Each direction is signed so its largest-magnitude loading is positive.
pub fn pca_project_2d(table: &SpeakerTable) -> Result<Projection> {
    let n = table.len();
    let d = table.dim();
    if n < 3 || d < 2 {
        return Err(Error::InvalidInput(format!(
            "PCA projection needs >= 3 entries and dim >= 2 (got {n} x {d})"
        )));
    }
    let mut mean = vec![0.0; d];
    for e in table.entries() {
        for (m, v) in mean.iter_mut().zip(&e.vector) {
            *m += f64::from(*v);
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    let centered = DMatrix::from_fn(n, d, |i, j| {
        f64::from(table.entries()[i].vector[j]) - mean[j]
    });

    let svd = centered.clone().svd(false, true);
    let v_t = svd.v_t.expect("right singular vectors requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| {
        svd.singular_values[b]
            .total_cmp(&svd.singular_values[a])
            .then(a.cmp(&b))
    });
    let total: f64 = svd.singular_values.iter().map(|s| s * s).sum();
    if !(total > 1e-24) {
        return Err(Error::InvalidInput(
            "PCA projection of rank-0 (constant) data".into(),
        ));
    }

    let component = |k: usize| -> Vec<f64> {
        let row = v_t.row(order[k]);
        let mut v: Vec<f64> = row.iter().copied().collect();
        let mut best = 0;
        for j in 1..v.len() {
            if v[j].abs() > v[best].abs() {
                best = j;
            }
        }
        if v[best] < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
        v
    };
    let components = [component(0), component(1)];
    let explained_variance = [
        svd.singular_values[order[0]].powi(2) / total,
        svd.singular_values[order[1]].powi(2) / total,
    ];

    let points = table
        .entries()
        .iter()
        .enumerate()
        .map(|(i, e)| {
            let row = centered.row(i);
            let proj = |c: &[f64]| row.iter().zip(c).map(|(a, b)| a * b).sum::<f64>();
            ProjectedPoint {
                speaker_id: e.speaker_id.clone(),
                language: e.language.clone(),
                label: e.label,
                x: proj(&components[0]),
                y: proj(&components[1]),
            }
        })
        .collect();
    Ok(Projection {
        points,
        explained_variance,
        mean,
        components,
    })
}
