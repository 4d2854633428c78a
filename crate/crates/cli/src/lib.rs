//! Command implementations behind the `langshift` binary. Every command
//! reads its inputs, writes a directory of JSON/CSV files (including a
//! `config.json` echo of the resolved flags) and returns a short text
//! summary for stdout.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use langshift::analysis::{pca_project_2d, run_language_probe, ProbeResult};
use langshift::corpus::{
    aggregate_speakers, load_matrix, load_speaker_table, write_manifest, write_matrix,
    CorpusManifest, Label, RecordingRecord, SpeakerTable,
};
use langshift::eval::{compare_reports, run_experiment, EvalReport, ExperimentConfig, Setting};
use langshift::linear::HingeParams;
use langshift::shift::{apply_language_shift, centroid_distance_matrix, estimate_centroids};
use langshift::synth::{generate, SynthSpec};

/// A failed command: message plus process exit code (1 runtime, 2 invalid
/// input or usage).
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn usage(message: impl Into<String>) -> Self {
        Self { code: 2, message: message.into() }
    }

    pub fn runtime(message: impl Into<String>) -> Self {
        Self { code: 1, message: message.into() }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<langshift::Error> for Failure {
    fn from(e: langshift::Error) -> Self {
        match e {
            langshift::Error::Io { .. } | langshift::Error::Json(_) => Self::runtime(e.to_string()),
            _ => Self::usage(e.to_string()),
        }
    }
}

pub type CmdResult = Result<String, Failure>;

#[derive(Parser, Debug)]
#[command(
    name = "langshift",
    version,
    about = "Language-shift toolkit for cross-lingual dysarthria detection",
    args_override_self = true
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Check a manifest/matrix pair and summarize the corpus.
    Validate(ValidateArgs),
    /// Export centroids and the corpus shifted into a target language.
    Shift(ShiftArgs),
    /// Run the cross-validated PD detection experiment.
    Eval(EvalArgs),
    /// Language-identity probe before and after shifting.
    Probe(ProbeArgs),
    /// Pairwise distances between language centroids.
    Distances(CorpusOut),
    /// 2-D PCA coordinates of speaker vectors.
    Project(ProjectArgs),
    /// Generate a synthetic corpus with known ground truth.
    Synth(SynthArgs),
}

#[derive(Args, Debug, Clone)]
pub struct CorpusArgs {
    /// JSONL recording manifest.
    #[arg(long)]
    pub manifest: PathBuf,
    /// EVEC embedding matrix.
    #[arg(long)]
    pub matrix: PathBuf,
}

#[derive(Args, Debug, Clone)]
pub struct CorpusOut {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug, Clone)]
pub struct ValidateArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    /// Also write the report to this directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct ShiftArgs {
    #[command(flatten)]
    pub io: CorpusOut,
    #[arg(long)]
    pub target_lang: String,
}

fn parse_setting(s: &str) -> Result<Setting, String> {
    match s {
        "cross-lingual" => Ok(Setting::CrossLingual),
        "multilingual" => Ok(Setting::Multilingual),
        "monolingual" => Ok(Setting::Monolingual),
        _ => Err(format!("unknown setting {s:?} (cross-lingual, multilingual, monolingual)")),
    }
}

#[derive(Args, Debug, Clone)]
pub struct EvalArgs {
    #[command(flatten)]
    pub io: CorpusOut,
    #[arg(long)]
    pub target_lang: String,
    /// cross-lingual, multilingual or monolingual.
    #[arg(long, value_parser = parse_setting, default_value = "cross-lingual")]
    pub setting: Setting,
    /// Apply the language shift (default unless monolingual).
    #[arg(long, overrides_with = "no_shift")]
    pub shift: bool,
    #[arg(long, overrides_with = "shift")]
    pub no_shift: bool,
    /// Run both the unshifted baseline and the shifted model.
    #[arg(long)]
    pub compare: bool,
    #[arg(long, value_delimiter = ',', default_value = "0,1,2")]
    pub seeds: Vec<u64>,
    #[arg(long, default_value_t = 5)]
    pub k_folds: usize,
    #[arg(long, default_value_t = 0.9)]
    pub min_sensitivity: f64,
    /// Skip per-seed class capping.
    #[arg(long)]
    pub no_cap: bool,
    /// z-normalize detector features with training statistics.
    #[arg(long)]
    pub normalize: bool,
}

impl EvalArgs {
    pub fn new(io: CorpusOut, target_lang: impl Into<String>, setting: Setting) -> Self {
        Self {
            io,
            target_lang: target_lang.into(),
            setting,
            shift: false,
            no_shift: false,
            compare: false,
            seeds: vec![0, 1, 2],
            k_folds: 5,
            min_sensitivity: 0.9,
            no_cap: false,
            normalize: false,
        }
    }

    fn apply_shift(&self) -> Result<bool, Failure> {
        match (self.shift, self.no_shift) {
            (true, _) if self.setting == Setting::Monolingual => {
                Err(Failure::usage("--shift cannot be used with the monolingual setting"))
            }
            (true, _) => Ok(true),
            (_, true) => Ok(false),
            _ => Ok(self.setting != Setting::Monolingual),
        }
    }

    pub fn experiment_config(&self, apply_shift: bool) -> ExperimentConfig {
        let mut c = ExperimentConfig::new(&self.target_lang, self.setting, apply_shift);
        c.seeds = self.seeds.clone();
        c.k_folds = self.k_folds;
        c.min_sensitivity = self.min_sensitivity;
        c.cap_classes = !self.no_cap;
        c.normalize_features = self.normalize;
        c
    }
}

#[derive(Args, Debug, Clone)]
pub struct ProbeArgs {
    #[command(flatten)]
    pub io: CorpusOut,
    /// Shift target to probe; every language when omitted.
    #[arg(long)]
    pub target_lang: Option<String>,
    /// SVM regularization constant.
    #[arg(long, default_value_t = 1.0)]
    pub c: f64,
}

#[derive(Args, Debug, Clone)]
pub struct ProjectArgs {
    #[command(flatten)]
    pub io: CorpusOut,
    /// Shift every speaker into this language before projecting.
    #[arg(long)]
    pub target_lang: Option<String>,
    /// Project PD speakers only.
    #[arg(long)]
    pub pd_only: bool,
}

#[derive(Args, Debug, Clone)]
pub struct SynthArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "cz,de,es")]
    pub languages: Vec<String>,
    /// Language whose offset is aligned against the pathology direction.
    #[arg(long)]
    pub target_lang: Option<String>,
    #[arg(long, default_value_t = 64)]
    pub dim: usize,
    #[arg(long, default_value_t = 40)]
    pub speakers_per_cell: usize,
    #[arg(long, default_value_t = 1)]
    pub recordings_min: usize,
    #[arg(long, default_value_t = 3)]
    pub recordings_max: usize,
    #[arg(long, default_value_t = 10.0)]
    pub language_offset_norm: f64,
    #[arg(long, default_value_t = 3.0)]
    pub pathology_magnitude: f64,
    #[arg(long, default_value_t = 1.0)]
    pub noise_sigma: f64,
    #[arg(long, default_value_t = 0.0)]
    pub adversarial_alignment: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

impl SynthArgs {
    pub fn spec(&self) -> SynthSpec {
        SynthSpec {
            languages: self.languages.clone(),
            target_language: self.target_lang.clone(),
            dim: self.dim,
            speakers_per_cell: self.speakers_per_cell,
            recordings_min: self.recordings_min,
            recordings_max: self.recordings_max,
            language_offset_norm: self.language_offset_norm,
            pathology_magnitude: self.pathology_magnitude,
            noise_sigma: self.noise_sigma,
            adversarial_alignment: self.adversarial_alignment,
            seed: self.seed,
        }
    }
}

pub fn run(cli: &Cli) -> CmdResult {
    match &cli.command {
        Command::Validate(a) => cmd_validate(a),
        Command::Shift(a) => cmd_shift(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Probe(a) => cmd_probe(a),
        Command::Distances(a) => cmd_distances(a),
        Command::Project(a) => cmd_project(a),
        Command::Synth(a) => cmd_synth(a),
    }
}

fn create_dir(dir: &Path) -> Result<(), Failure> {
    fs::create_dir_all(dir)
        .map_err(|e| Failure::runtime(format!("cannot create {}: {e}", dir.display())))
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<(), Failure> {
    let path = dir.join(name);
    fs::write(&path, contents)
        .map_err(|e| Failure::runtime(format!("cannot write {}: {e}", path.display())))
}

fn write_json<T: Serialize + ?Sized>(dir: &Path, name: &str, value: &T) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| Failure::runtime(format!("cannot serialize {name}: {e}")))?;
    write_file(dir, name, &(text + "\n"))
}

fn corpus_echo(c: &CorpusArgs) -> serde_json::Value {
    json!({ "manifest": c.manifest, "matrix": c.matrix })
}

fn load_table(c: &CorpusArgs) -> Result<SpeakerTable, Failure> {
    Ok(load_speaker_table(&c.manifest, &c.matrix)?)
}

fn require_language(table: &SpeakerTable, lang: &str) -> Result<(), Failure> {
    let langs = table.languages();
    if langs.contains(lang) {
        Ok(())
    } else {
        Err(Failure::usage(format!(
            "unknown language {lang:?}; corpus has {}",
            langs.into_iter().collect::<Vec<_>>().join(", ")
        )))
    }
}

fn everyone(table: &SpeakerTable) -> std::collections::BTreeSet<String> {
    table.speaker_ids()
}

#[derive(Serialize)]
struct CellCount {
    language: String,
    label: Label,
    speakers: usize,
    recordings: usize,
}

/// Validates the pair and reports every out-of-range row with its manifest
/// line, not just the first.
pub fn cmd_validate(args: &ValidateArgs) -> CmdResult {
    let c = &args.corpus;
    let matrix = load_matrix(&c.matrix)?;
    let text = fs::read_to_string(&c.manifest)
        .map_err(|e| Failure::runtime(format!("cannot read {}: {e}", c.manifest.display())))?;
    let manifest = CorpusManifest::from_jsonl(&text)?;

    let mut problems = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let rec: RecordingRecord =
            serde_json::from_str(line).expect("line parsed when the manifest was loaded");
        if rec.row >= matrix.rows() {
            problems.push(format!(
                "manifest line {}: recording {:?} points at row {} but the matrix has {} rows",
                i + 1,
                rec.recording_id,
                rec.row,
                matrix.rows()
            ));
        }
    }
    if !problems.is_empty() {
        return Err(Failure::usage(problems.join("\n")));
    }

    let table = aggregate_speakers(&manifest, &matrix)?;
    let mut cells: Vec<CellCount> = Vec::new();
    for lang in table.languages() {
        for label in [Label::Hc, Label::Pd] {
            let speakers = table
                .entries()
                .iter()
                .filter(|e| e.language == lang && e.label == label)
                .count();
            let recordings = manifest
                .records()
                .iter()
                .filter(|r| r.language == lang && r.label == label)
                .count();
            cells.push(CellCount { language: lang.clone(), label, speakers, recordings });
        }
    }
    let unused_rows = matrix.rows() - manifest.len();
    let report = json!({
        "recordings": manifest.len(),
        "speakers": table.len(),
        "dim": matrix.dim(),
        "matrix_rows": matrix.rows(),
        "unused_rows": unused_rows,
        "cells": cells,
    });
    if let Some(out) = &args.out {
        create_dir(out)?;
        write_json(out, "config.json", &json!({ "command": "validate", "corpus": corpus_echo(c) }))?;
        write_json(out, "report.json", &report)?;
    }

    let mut msg = format!(
        "ok: {} recordings, {} speakers, dim {}\n",
        manifest.len(),
        table.len(),
        matrix.dim()
    );
    for cell in &cells {
        msg.push_str(&format!(
            "  {} {}: {} speakers, {} recordings\n",
            cell.language, cell.label, cell.speakers, cell.recordings
        ));
    }
    if unused_rows > 0 {
        msg.push_str(&format!("  note: {unused_rows} matrix rows are not referenced\n"));
    }
    Ok(msg)
}

/// Centroids from every HC speaker, and the speaker-level corpus with all
/// source languages moved into the target.
pub fn cmd_shift(args: &ShiftArgs) -> CmdResult {
    let table = load_table(&args.io.corpus)?;
    require_language(&table, &args.target_lang)?;
    let centroids = estimate_centroids(&table, &everyone(&table))?;
    let shifted = apply_language_shift(&table, &centroids, &args.target_lang)?;
    let (manifest, matrix) = shifted.table.to_corpus()?;

    let out = &args.io.out;
    create_dir(out)?;
    write_json(
        out,
        "config.json",
        &json!({
            "command": "shift",
            "corpus": corpus_echo(&args.io.corpus),
            "target_language": args.target_lang,
            "centroid_set_id": shifted.centroid_set_id,
        }),
    )?;
    write_json(out, "centroids.json", &centroids)?;
    let mut csv = String::from("language,hc_count,distance_to_target\n");
    let mu_t = &centroids.get(&args.target_lang)?.vector;
    for (lang, c) in &centroids.centroids {
        let d = langshift::shift::centroid_distance(&c.vector, mu_t)?;
        csv.push_str(&format!("{lang},{},{d}\n", c.hc_count));
    }
    write_file(out, "centroids.csv", &csv)?;
    write_manifest(&manifest, out.join("manifest.jsonl"))?;
    write_matrix(&matrix, out.join("corpus.evec"))?;
    Ok(format!(
        "shifted {} speakers into {} (centroid set {})\n",
        shifted.table.len(),
        args.target_lang,
        shifted.centroid_set_id
    ))
}

fn summary_csv(report: &EvalReport) -> String {
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    let s = &report.summary;
    let mut out = String::from("metric,mean,std,n\n");
    for (name, m) in [("sensitivity", &s.sensitivity), ("specificity", &s.specificity), ("f1", &s.f1)] {
        out.push_str(&format!("{name},{},{},{}\n", opt(m.mean), opt(m.std), m.n));
    }
    out
}

fn write_report(dir: &Path, report: &EvalReport) -> Result<(), Failure> {
    create_dir(dir)?;
    write_file(dir, "report.json", &report.to_json()?)?;
    write_file(dir, "cells.csv", &report.cells_csv())?;
    write_file(dir, "summary.csv", &summary_csv(report))
}

fn summary_line(label: &str, report: &EvalReport) -> String {
    let fmt = |m: &langshift::eval::MetricSummary| match (m.mean, m.std) {
        (Some(a), Some(b)) => format!("{a:.3}±{b:.3}"),
        _ => "n/a".into(),
    };
    let s = &report.summary;
    let mut line = format!(
        "{label}: sensitivity {}  specificity {}  f1 {}",
        fmt(&s.sensitivity),
        fmt(&s.specificity),
        fmt(&s.f1)
    );
    if s.failed_cells > 0 {
        line.push_str(&format!("  ({} failed cells)", s.failed_cells));
    }
    line + "\n"
}

pub fn cmd_eval(args: &EvalArgs) -> CmdResult {
    let table = load_table(&args.io.corpus)?;
    require_language(&table, &args.target_lang)?;
    let out = &args.io.out;

    if args.compare {
        if args.setting == Setting::Monolingual {
            return Err(Failure::usage("--compare needs a setting with source languages"));
        }
        let base_cfg = args.experiment_config(false);
        let ours_cfg = args.experiment_config(true);
        base_cfg.validate(&table)?;
        let baseline = run_experiment(&table, &base_cfg)?;
        let ours = run_experiment(&table, &ours_cfg)?;
        let cmp = compare_reports(&baseline, &ours)?;
        create_dir(out)?;
        write_json(
            out,
            "config.json",
            &json!({
                "command": "eval",
                "corpus": corpus_echo(&args.io.corpus),
                "compare": true,
                "baseline": base_cfg,
                "ours": ours_cfg,
            }),
        )?;
        write_report(&out.join("baseline"), &baseline)?;
        write_report(&out.join("ours"), &ours)?;
        write_json(out, "comparison.json", &cmp)?;
        write_file(out, "comparison.csv", &cmp.to_csv())?;
        return Ok(cmp.render());
    }

    let config = args.experiment_config(args.apply_shift()?);
    config.validate(&table)?;
    let report = run_experiment(&table, &config)?;
    create_dir(out)?;
    write_json(
        out,
        "config.json",
        &json!({
            "command": "eval",
            "corpus": corpus_echo(&args.io.corpus),
            "compare": false,
            "experiment": config,
        }),
    )?;
    write_report(out, &report)?;
    let label = format!(
        "{} {} ({})",
        config.target_language,
        config.setting,
        if config.apply_shift { "shifted" } else { "unshifted" }
    );
    Ok(summary_line(&label, &report))
}

pub fn cmd_probe(args: &ProbeArgs) -> CmdResult {
    let table = load_table(&args.io.corpus)?;
    let targets: Vec<String> = match &args.target_lang {
        Some(t) => {
            require_language(&table, t)?;
            vec![t.clone()]
        }
        None => table.languages().into_iter().collect(),
    };
    if !(args.c > 0.0 && args.c.is_finite()) {
        return Err(Failure::usage(format!("--c must be positive, got {}", args.c)));
    }
    let params = HingeParams { c: args.c, ..Default::default() };
    let centroids = estimate_centroids(&table, &everyone(&table))?;
    let mut results: Vec<ProbeResult> = vec![run_language_probe(&table, &centroids, None, &params)?];
    for t in &targets {
        results.push(run_language_probe(&table, &centroids, Some(t), &params)?);
    }

    let out = &args.io.out;
    create_dir(out)?;
    write_json(
        out,
        "config.json",
        &json!({
            "command": "probe",
            "corpus": corpus_echo(&args.io.corpus),
            "targets": targets,
            "svm": params,
        }),
    )?;
    write_json(out, "probe.json", &results)?;
    let mut csv = String::from("shift_target,accuracy,chance_level,n_train,n_eval\n");
    let mut msg = String::new();
    for r in &results {
        let name = r.shift_target.as_deref().unwrap_or("");
        csv.push_str(&format!(
            "{name},{},{},{},{}\n",
            r.accuracy, r.chance_level, r.n_train, r.n_eval
        ));
        msg.push_str(&format!(
            "{:<10} accuracy {:.3} (chance {:.3})\n",
            r.shift_target.as_deref().unwrap_or("unshifted"),
            r.accuracy,
            r.chance_level
        ));
    }
    write_file(out, "probe.csv", &csv)?;
    Ok(msg)
}

pub fn cmd_distances(args: &CorpusOut) -> CmdResult {
    let table = load_table(&args.corpus)?;
    let centroids = estimate_centroids(&table, &everyone(&table))?;
    let dist = centroid_distance_matrix(&centroids)?;
    let out = &args.out;
    create_dir(out)?;
    write_json(
        out,
        "config.json",
        &json!({ "command": "distances", "corpus": corpus_echo(&args.corpus) }),
    )?;
    write_json(out, "centroids.json", &centroids)?;
    write_json(out, "distances.json", &dist)?;
    let mut csv = String::from("language_a,language_b,distance\n");
    let mut msg = String::new();
    for (a, b, d) in dist.pairs() {
        csv.push_str(&format!("{a},{b},{d}\n"));
        msg.push_str(&format!("{a}-{b}: {d:.4}\n"));
    }
    write_file(out, "distances.csv", &csv)?;
    Ok(msg)
}

pub fn cmd_project(args: &ProjectArgs) -> CmdResult {
    let table = load_table(&args.io.corpus)?;
    let table = match &args.target_lang {
        Some(t) => {
            require_language(&table, t)?;
            let centroids = estimate_centroids(&table, &everyone(&table))?;
            apply_language_shift(&table, &centroids, t)?.table
        }
        None => table,
    };
    let table = if args.pd_only {
        table.filter(|e| e.label == Label::Pd)
    } else {
        table
    };
    let proj = pca_project_2d(&table)?;
    let out = &args.io.out;
    create_dir(out)?;
    write_json(
        out,
        "config.json",
        &json!({
            "command": "project",
            "corpus": corpus_echo(&args.io.corpus),
            "shift_target": args.target_lang,
            "pd_only": args.pd_only,
        }),
    )?;
    write_json(out, "projection.json", &proj)?;
    write_file(out, "projection.csv", &proj.to_csv())?;
    Ok(format!(
        "projected {} speakers; explained variance {:.3}, {:.3}\n",
        proj.points.len(),
        proj.explained_variance[0],
        proj.explained_variance[1]
    ))
}

pub fn cmd_synth(args: &SynthArgs) -> CmdResult {
    let spec = args.spec();
    let corpus = generate(&spec)?;
    create_dir(&args.out)?;
    corpus.write_to(&args.out)?;
    write_json(&args.out, "config.json", &json!({ "command": "synth", "spec": spec }))?;
    Ok(format!(
        "wrote {} recordings of dim {} to {}\n",
        corpus.manifest.len(),
        spec.dim,
        args.out.display()
    ))
}
