//! Outer stratified cross-validation over target-language speakers, with
//! nested threshold selection inside each training split.

use std::collections::BTreeSet;
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::folds::{cap_classes, make_folds, FoldPlan, SpeakerKey};
use super::metrics::{compute_metrics, MetricSet};
use super::threshold::{select_threshold, ThresholdChoice};
use crate::corpus::{Label, SpeakerEntry, SpeakerTable};
use crate::error::{Error, Result};
use crate::linear::{
    fit_normalizer, predict_proba, to_f64_rows, train_logistic, LinearModel, LogisticParams,
    Normalizer,
};
use crate::shift::{apply_language_shift, estimate_centroids, shift_vector, CentroidSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Setting {
    /// Sources HC+PD, target HC only.
    CrossLingual,
    /// Sources HC+PD, target HC+PD.
    Multilingual,
    /// Target HC+PD only.
    Monolingual,
}

impl fmt::Display for Setting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Setting::CrossLingual => "cross-lingual",
            Setting::Multilingual => "multilingual",
            Setting::Monolingual => "monolingual",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub target_language: String,
    pub setting: Setting,
    pub apply_shift: bool,
    pub k_folds: usize,
    pub seeds: Vec<u64>,
    pub min_sensitivity: f64,
    pub cap_classes: bool,
    /// Folds of the nested split used for threshold selection.
    pub inner_k: usize,
    /// z-normalize detector features with training-set statistics.
    pub normalize_features: bool,
    pub logistic: LogisticParams,
}

impl ExperimentConfig {
    pub fn new(target_language: impl Into<String>, setting: Setting, apply_shift: bool) -> Self {
        Self {
            target_language: target_language.into(),
            setting,
            apply_shift,
            k_folds: 5,
            seeds: vec![0, 1, 2],
            min_sensitivity: 0.9,
            cap_classes: true,
            inner_k: 3,
            normalize_features: false,
            logistic: LogisticParams::default(),
        }
    }

    pub fn validate(&self, table: &SpeakerTable) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        let langs = table.languages();
        if !langs.contains(&self.target_language) {
            return bad(format!(
                "target language {:?} not in corpus (have {:?})",
                self.target_language, langs
            ));
        }
        if self.setting != Setting::Monolingual && langs.len() < 2 {
            return bad(format!("{} setting needs at least one source language", self.setting));
        }
        if self.apply_shift && self.setting == Setting::Monolingual {
            return bad("language shift needs at least 2 languages; monolingual training has 1".into());
        }
        if self.k_folds < 2 || self.inner_k < 2 {
            return bad("k_folds and inner_k must be at least 2".into());
        }
        if self.seeds.is_empty() {
            return bad("at least one seed is required".into());
        }
        if !(0.0..=1.0).contains(&self.min_sensitivity) {
            return bad(format!("min_sensitivity {} outside [0, 1]", self.min_sensitivity));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split {
    pub train: BTreeSet<String>,
    pub test: BTreeSet<String>,
}

/// Training and test speakers of outer fold `fold` under `config.setting`.
/// `plan` partitions the target-language speakers of `table`.
pub fn assemble_training_set(
    table: &SpeakerTable,
    config: &ExperimentConfig,
    plan: &FoldPlan,
    fold: usize,
) -> Result<Split> {
    let target = config.target_language.as_str();
    if fold >= plan.k() {
        return Err(Error::InvalidInput(format!("fold {fold} out of range")));
    }
    let tgt_train = plan.train(fold);
    let test = plan.test(fold).clone();
    let mut train = BTreeSet::new();
    for e in table.entries() {
        if e.language == target {
            let admit = tgt_train.contains(&e.speaker_id)
                && (e.label == Label::Hc || config.setting != Setting::CrossLingual);
            if admit {
                train.insert(e.speaker_id.clone());
            }
        } else if config.setting != Setting::Monolingual {
            train.insert(e.speaker_id.clone());
        }
    }
    if let Some(e) = table
        .entries()
        .iter()
        .find(|e| test.contains(&e.speaker_id) && e.language != target)
    {
        return Err(Error::InvalidInput(format!(
            "fold plan puts non-target speaker {:?} in a test fold",
            e.speaker_id
        )));
    }
    Ok(Split { train, test })
}

/// A trained detector: optional language shift, optional z-normalization,
/// logistic model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Detector {
    pub target_language: String,
    pub centroids: Option<CentroidSet>,
    pub normalizer: Option<Normalizer>,
    pub model: LinearModel,
}

impl Detector {
    fn features(&self, e: &SpeakerEntry) -> Result<Vec<f64>> {
        let v = match &self.centroids {
            Some(c) if e.language != self.target_language => shift_vector(
                &e.vector,
                &c.get(&e.language)?.vector,
                &c.get(&self.target_language)?.vector,
            )?,
            _ => e.vector.clone(),
        };
        let v: Vec<f64> = v.iter().map(|x| f64::from(*x)).collect();
        match &self.normalizer {
            Some(n) => n.apply(&v),
            None => Ok(v),
        }
    }

    /// PD probability for one speaker.
    pub fn probability(&self, e: &SpeakerEntry) -> Result<f64> {
        predict_proba(&self.model, &self.features(e)?)
    }
}

/// Trains a detector on the speakers of `table` listed in `train`. Only
/// those speakers are read.
pub fn fit_detector(
    table: &SpeakerTable,
    train: &BTreeSet<String>,
    config: &ExperimentConfig,
) -> Result<Detector> {
    let train_table = table.filter(|e| train.contains(&e.speaker_id));
    let (centroids, rows) = if config.apply_shift {
        let centroids = estimate_centroids(&train_table, train)?;
        let shifted = apply_language_shift(&train_table, &centroids, &config.target_language)?;
        let rows: Vec<&[f32]> = shifted.table.entries().iter().map(|e| e.vector.as_slice()).collect();
        (Some(centroids), to_f64_rows(&rows))
    } else {
        let rows: Vec<&[f32]> = train_table.entries().iter().map(|e| e.vector.as_slice()).collect();
        (None, to_f64_rows(&rows))
    };
    let labels: Vec<bool> = train_table.entries().iter().map(|e| e.label.is_positive()).collect();
    let (normalizer, rows) = if config.normalize_features {
        let n = fit_normalizer(&rows)?;
        let rows = n.apply_all(&rows)?;
        (Some(n), rows)
    } else {
        (None, rows)
    };
    let model = train_logistic(&rows, &labels, &config.logistic)?;
    Ok(Detector {
        target_language: config.target_language.clone(),
        centroids,
        normalizer,
        model,
    })
}

/// Everything fitted for one outer (seed, fold) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedCell {
    pub detector: Detector,
    pub inner_choices: Vec<ThresholdChoice>,
    pub threshold: f64,
    /// True when every inner selection met the sensitivity floor.
    pub threshold_feasible: bool,
}

fn inner_seed(seed: u64, fold: usize) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(fold as u64 + 1)
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Fits the detector on `train` and selects its threshold by nested CV on
/// the same speakers: `inner_k` stratified folds, one selection per inner
/// fold, final threshold = median. Nothing outside `train` is read.
pub fn fit_cell(
    table: &SpeakerTable,
    train: &BTreeSet<String>,
    config: &ExperimentConfig,
    seed: u64,
    fold: usize,
) -> Result<FittedCell> {
    let detector = fit_detector(table, train, config)?;
    let keys: Vec<SpeakerKey> = table
        .entries()
        .iter()
        .filter(|e| train.contains(&e.speaker_id))
        .map(SpeakerKey::from)
        .collect();
    let inner = make_folds(&keys, config.inner_k, inner_seed(seed, fold))?;
    let mut inner_choices = Vec::with_capacity(config.inner_k);
    for i in 0..inner.k() {
        let inner_det = fit_detector(table, &inner.train(i), config)?;
        let mut probs = Vec::new();
        let mut labels = Vec::new();
        for id in inner.test(i) {
            let e = table.get(id).expect("inner speakers come from the table");
            probs.push(inner_det.probability(e)?);
            labels.push(e.label.is_positive());
        }
        inner_choices.push(select_threshold(&probs, &labels, config.min_sensitivity)?);
    }
    let mut ts: Vec<f64> = inner_choices.iter().map(|c| c.threshold).collect();
    let threshold = median(&mut ts);
    let threshold_feasible = inner_choices.iter().all(|c| c.feasible);
    Ok(FittedCell {
        detector,
        inner_choices,
        threshold,
        threshold_feasible,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellReport {
    pub seed: u64,
    pub fold: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub threshold: Option<f64>,
    pub threshold_feasible: Option<bool>,
    pub metrics: Option<MetricSet>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub mean: Option<f64>,
    /// Population standard deviation over cells.
    pub std: Option<f64>,
    /// Cells that contributed a defined value.
    pub n: usize,
}

impl MetricSummary {
    pub fn from_values(values: &[f64]) -> Self {
        if values.is_empty() {
            return Self { mean: None, std: None, n: 0 };
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        Self {
            mean: Some(mean),
            std: Some(var.sqrt()),
            n: values.len(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub sensitivity: MetricSummary,
    pub specificity: MetricSummary,
    pub f1: MetricSummary,
    pub failed_cells: usize,
}

impl Summary {
    pub fn from_cells(cells: &[CellReport]) -> Self {
        let collect = |pick: fn(&MetricSet) -> Option<f64>| -> Vec<f64> {
            cells
                .iter()
                .filter_map(|c| c.metrics.as_ref().and_then(pick))
                .collect()
        };
        Self {
            sensitivity: MetricSummary::from_values(&collect(|m| m.sensitivity)),
            specificity: MetricSummary::from_values(&collect(|m| m.specificity)),
            f1: MetricSummary::from_values(&collect(|m| m.f1)),
            failed_cells: cells.iter().filter(|c| c.error.is_some()).count(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub config: ExperimentConfig,
    pub cells: Vec<CellReport>,
    pub summary: Summary,
}

impl EvalReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    /// One row per cell; absent metrics are empty fields.
    pub fn cells_csv(&self) -> String {
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        let mut out = String::from(
            "seed,fold,n_train,n_test,threshold,threshold_feasible,tp,fp,tn,fn,sensitivity,specificity,f1,error\n",
        );
        for c in &self.cells {
            let (counts, sens, spec, f1) = match &c.metrics {
                Some(m) => (
                    format!("{},{},{},{}", m.tp, m.fp, m.tn, m.fn_),
                    opt(m.sensitivity),
                    opt(m.specificity),
                    opt(m.f1),
                ),
                None => (",,,".to_string(), String::new(), String::new(), String::new()),
            };
            let err = c
                .error
                .as_deref()
                .map(|e| format!("\"{}\"", e.replace('"', "\"\"")))
                .unwrap_or_default();
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{}\n",
                c.seed,
                c.fold,
                c.n_train,
                c.n_test,
                opt(c.threshold),
                c.threshold_feasible.map(|b| b.to_string()).unwrap_or_default(),
                counts,
                sens,
                spec,
                f1,
                err
            ));
        }
        out
    }
}

/// Per-seed inputs shared by that seed's folds.
pub struct SeedPlan {
    pub seed: u64,
    pub table: SpeakerTable,
    pub folds: FoldPlan,
}

/// Capping (if enabled) followed by stratified folds over the target
/// language's speakers.
pub fn plan_seed(table: &SpeakerTable, config: &ExperimentConfig, seed: u64) -> Result<SeedPlan> {
    let table = if config.cap_classes {
        cap_classes(table, seed)
    } else {
        table.clone()
    };
    let keys: Vec<SpeakerKey> = table
        .entries()
        .iter()
        .filter(|e| e.language == config.target_language)
        .map(SpeakerKey::from)
        .collect();
    let folds = make_folds(&keys, config.k_folds, seed)?;
    Ok(SeedPlan { seed, table, folds })
}

fn run_cell(plan: &SeedPlan, config: &ExperimentConfig, fold: usize) -> CellReport {
    let mut cell = CellReport {
        seed: plan.seed,
        fold,
        n_train: 0,
        n_test: 0,
        threshold: None,
        threshold_feasible: None,
        metrics: None,
        error: None,
    };
    let outcome = (|| -> Result<()> {
        let split = assemble_training_set(&plan.table, config, &plan.folds, fold)?;
        cell.n_train = split.train.len();
        cell.n_test = split.test.len();
        let fitted = fit_cell(&plan.table, &split.train, config, plan.seed, fold)?;
        cell.threshold = Some(fitted.threshold);
        cell.threshold_feasible = Some(fitted.threshold_feasible);
        let mut preds = Vec::with_capacity(split.test.len());
        let mut labels = Vec::with_capacity(split.test.len());
        for id in &split.test {
            let e = plan.table.get(id).expect("test speakers come from the table");
            preds.push(fitted.detector.probability(e)? >= fitted.threshold);
            labels.push(e.label.is_positive());
        }
        cell.metrics = Some(compute_metrics(&preds, &labels)?);
        Ok(())
    })();
    if let Err(e) = outcome {
        cell.error = Some(e.to_string());
    }
    cell
}

/// Runs every (seed, fold) cell. Cells run in parallel and are reported in
/// (seed, fold) order. A failing cell is recorded with its error and left
/// out of the summary.
pub fn run_experiment(table: &SpeakerTable, config: &ExperimentConfig) -> Result<EvalReport> {
    config.validate(table)?;
    let plans: Vec<SeedPlan> = config
        .seeds
        .iter()
        .map(|&s| plan_seed(table, config, s))
        .collect::<Result<_>>()?;
    let jobs: Vec<(&SeedPlan, usize)> = plans
        .iter()
        .flat_map(|p| (0..p.folds.k()).map(move |f| (p, f)))
        .collect();
    let cells: Vec<CellReport> = jobs
        .par_iter()
        .map(|(plan, fold)| run_cell(plan, config, *fold))
        .collect();
    let summary = Summary::from_cells(&cells);
    Ok(EvalReport {
        config: config.clone(),
        cells,
        summary,
    })
}
