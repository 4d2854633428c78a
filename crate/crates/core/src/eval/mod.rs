//! Evaluation protocol: class capping, stratified speaker-independent folds,
//! sensitivity-constrained threshold selection and metric aggregation over
//! folds and seeds.

mod compare;
mod experiment;
mod folds;
mod metrics;
mod threshold;

pub use compare::{compare_reports, Comparison, ComparisonRow};
pub use experiment::{
    assemble_training_set, fit_cell, fit_detector, plan_seed, run_experiment, CellReport,
    Detector, EvalReport, ExperimentConfig, FittedCell, MetricSummary, SeedPlan, Setting, Split,
    Summary,
};
pub use folds::{cap_classes, make_folds, FoldPlan, SpeakerKey};
pub use metrics::{compute_metrics, MetricSet};
pub use threshold::{select_threshold, ThresholdChoice};
