use serde::{Deserialize, Serialize};

use super::experiment::{EvalReport, MetricSummary, Setting};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub metric: String,
    pub baseline: MetricSummary,
    pub ours: MetricSummary,
}

/// Baseline (no shift) vs. shifted summaries of the same experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub target_language: String,
    pub setting: Setting,
    pub baseline_name: String,
    pub rows: Vec<ComparisonRow>,
}

pub fn compare_reports(baseline: &EvalReport, ours: &EvalReport) -> Result<Comparison> {
    let (b, o) = (&baseline.config, &ours.config);
    if b.apply_shift || !o.apply_shift {
        return Err(Error::InvalidInput(
            "comparison expects an unshifted baseline and a shifted run".into(),
        ));
    }
    if b.target_language != o.target_language || b.setting != o.setting || b.seeds != o.seeds {
        return Err(Error::InvalidInput(
            "baseline and shifted runs differ in target, setting or seeds".into(),
        ));
    }
    let baseline_name = match b.setting {
        Setting::CrossLingual => "Cross.",
        Setting::Multilingual => "Multi.",
        Setting::Monolingual => "Mono.",
    };
    let row = |metric: &str, pick: fn(&EvalReport) -> &MetricSummary| ComparisonRow {
        metric: metric.to_string(),
        baseline: pick(baseline).clone(),
        ours: pick(ours).clone(),
    };
    Ok(Comparison {
        target_language: b.target_language.clone(),
        setting: b.setting,
        baseline_name: baseline_name.to_string(),
        rows: vec![
            row("specificity", |r| &r.summary.specificity),
            row("sensitivity", |r| &r.summary.sensitivity),
            row("f1", |r| &r.summary.f1),
        ],
    })
}

fn cell(m: &MetricSummary) -> String {
    match (m.mean, m.std) {
        (Some(mean), Some(std)) => format!("{mean:.2}±{std:.2}"),
        _ => "n/a".to_string(),
    }
}

impl Comparison {
    pub fn to_csv(&self) -> String {
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        let mut out = String::from("metric,baseline_mean,baseline_std,ours_mean,ours_std\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                r.metric,
                opt(r.baseline.mean),
                opt(r.baseline.std),
                opt(r.ours.mean),
                opt(r.ours.std)
            ));
        }
        out
    }

    /// Plain-text table, one metric per line as `baseline / ours`.
    pub fn render(&self) -> String {
        let mut out = format!(
            "target {} ({}): {} / Ours\n",
            self.target_language, self.setting, self.baseline_name
        );
        for r in &self.rows {
            out.push_str(&format!(
                "  {:<12} {} / {}\n",
                r.metric,
                cell(&r.baseline),
                cell(&r.ours)
            ));
        }
        out
    }
}
