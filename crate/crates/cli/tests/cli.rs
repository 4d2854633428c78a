use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use langshift::corpus::{encode_matrix, CorpusManifest, EmbeddingMatrix, Label, RecordingRecord};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_langshift"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Small synthetic corpus written through the binary itself.
fn synth(dir: &Path, extra: &[&str]) -> (PathBuf, PathBuf) {
    let out = dir.join("corpus");
    let mut args = vec!["synth", "--out", s(&out), "--dim", "8", "--speakers-per-cell", "10"];
    args.extend_from_slice(extra);
    let o = run(&args);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    (out.join("manifest.jsonl"), out.join("corpus.evec"))
}

#[test]
fn synth_output_validates() {
    let dir = tempfile::tempdir().unwrap();
    let (m, x) = synth(dir.path(), &["--languages", "a,b"]);
    let o = run(&["validate", "--manifest", s(&m), "--matrix", s(&x)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(String::from_utf8_lossy(&o.stdout).starts_with("ok: "));
    let cfg: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("corpus/config.json")).unwrap()).unwrap();
    assert_eq!(cfg["spec"]["languages"], serde_json::json!(["a", "b"]));
}

#[test]
fn validate_reports_out_of_range_row_with_line() {
    let dir = tempfile::tempdir().unwrap();
    let m = dir.path().join("m.jsonl");
    let x = dir.path().join("x.evec");
    fs::write(
        &m,
        "{\"recording_id\":\"r0\",\"speaker_id\":\"s\",\"language\":\"cz\",\"label\":\"HC\",\"row\":0}\n\n\
         {\"recording_id\":\"r1\",\"speaker_id\":\"s\",\"language\":\"cz\",\"label\":\"HC\",\"row\":5}\n",
    )
    .unwrap();
    fs::write(&x, encode_matrix(&EmbeddingMatrix::new(1, 2, vec![0.0, 1.0]).unwrap()).unwrap()).unwrap();
    let o = run(&["validate", "--manifest", s(&m), "--matrix", s(&x)]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("manifest line 3"), "{}", stderr(&o));
}

#[test]
fn validate_rejects_nan_payload() {
    let dir = tempfile::tempdir().unwrap();
    let (m, x) = synth(dir.path(), &[]);
    let mut bytes = fs::read(&x).unwrap();
    bytes[16..20].copy_from_slice(&f32::NAN.to_le_bytes());
    fs::write(&x, bytes).unwrap();
    let o = run(&["validate", "--manifest", s(&m), "--matrix", s(&x)]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("non-finite value at row 0, col 0"), "{}", stderr(&o));
}

#[test]
fn missing_input_is_a_runtime_failure() {
    let dir = tempfile::tempdir().unwrap();
    let nope = dir.path().join("nope");
    let o = run(&["validate", "--manifest", s(&nope), "--matrix", s(&nope)]);
    assert_eq!(code(&o), 1, "{}", stderr(&o));
}

#[test]
fn usage_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let (m, x) = synth(dir.path(), &[]);
    let out = dir.path().join("out");
    let base = ["eval", "--manifest", s(&m), "--matrix", s(&x), "--out", s(&out)];

    let unknown = run(&[&base[..], &["--target-lang", "xx"]].concat());
    assert_eq!(code(&unknown), 2);
    assert!(stderr(&unknown).contains("\"xx\""));

    let mono_shift = run(&[&base[..], &["--target-lang", "cz", "--setting", "monolingual", "--shift"]].concat());
    assert_eq!(code(&mono_shift), 2);

    let bad_setting = run(&[&base[..], &["--target-lang", "cz", "--setting", "nope"]].concat());
    assert_eq!(code(&bad_setting), 2);

    let bad_synth = run(&["synth", "--out", s(&out), "--adversarial-alignment", "2"]);
    assert_eq!(code(&bad_synth), 2);
}

#[test]
fn eval_writes_config_report_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    let (m, x) = synth(dir.path(), &[]);
    let out = dir.path().join("eval");
    let o = run(&[
        "eval", "--manifest", s(&m), "--matrix", s(&x), "--out", s(&out),
        "--target-lang", "de", "--setting", "multilingual", "--seeds", "3,4", "--k-folds", "2",
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let cfg: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("config.json")).unwrap()).unwrap();
    assert_eq!(cfg["experiment"]["seeds"], serde_json::json!([3, 4]));
    assert_eq!(cfg["experiment"]["apply_shift"], true);
    let cells = fs::read_to_string(out.join("cells.csv")).unwrap();
    assert_eq!(cells.lines().count(), 1 + 4);
    assert!(fs::read_to_string(out.join("summary.csv")).unwrap().starts_with("metric,mean,std,n\n"));
}

#[test]
fn monolingual_runs_on_a_single_language() {
    let dir = tempfile::tempdir().unwrap();
    let (m, x) = synth(dir.path(), &["--languages", "cz"]);
    let out = dir.path().join("mono");
    let o = run(&[
        "eval", "--manifest", s(&m), "--matrix", s(&x), "--out", s(&out),
        "--target-lang", "cz", "--setting", "monolingual", "--k-folds", "2",
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let report = fs::read_to_string(out.join("report.json")).unwrap();
    assert!(report.contains("\"apply_shift\": false"));
    assert!(report.contains("\"failed_cells\": 0"));
}

#[test]
fn distances_on_two_languages_give_one_pair() {
    let dir = tempfile::tempdir().unwrap();
    let (m, x) = synth(dir.path(), &["--languages", "a,b"]);
    let out = dir.path().join("dist");
    let o = run(&["distances", "--manifest", s(&m), "--matrix", s(&x), "--out", s(&out)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let csv = fs::read_to_string(out.join("distances.csv")).unwrap();
    assert_eq!(csv.lines().count(), 2);
    assert!(csv.lines().nth(1).unwrap().starts_with("a,b,"));
}

#[test]
fn probe_accuracy_drops_after_shift() {
    let dir = tempfile::tempdir().unwrap();
    let (m, x) = synth(dir.path(), &["--dim", "32", "--speakers-per-cell", "30"]);
    let out = dir.path().join("probe");
    let o = run(&["probe", "--manifest", s(&m), "--matrix", s(&x), "--out", s(&out)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let results: Vec<serde_json::Value> =
        serde_json::from_str(&fs::read_to_string(out.join("probe.json")).unwrap()).unwrap();
    assert_eq!(results.len(), 4);
    let before = results[0]["accuracy"].as_f64().unwrap();
    for r in &results[1..] {
        assert!(before - r["accuracy"].as_f64().unwrap() >= 0.5);
    }
}

#[test]
fn shift_exports_a_loadable_speaker_corpus() {
    let dir = tempfile::tempdir().unwrap();
    let (m, x) = synth(dir.path(), &[]);
    let out = dir.path().join("shift");
    let o = run(&["shift", "--manifest", s(&m), "--matrix", s(&x), "--out", s(&out), "--target-lang", "es"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let t = langshift::corpus::load_speaker_table(out.join("manifest.jsonl"), out.join("corpus.evec")).unwrap();
    assert_eq!(t.len(), 60);
    let csv = fs::read_to_string(out.join("centroids.csv")).unwrap();
    assert!(csv.contains("\nes,10,0\n"), "{csv}");
}

#[test]
fn project_emits_coordinates() {
    let dir = tempfile::tempdir().unwrap();
    let (m, x) = synth(dir.path(), &[]);
    let out = dir.path().join("proj");
    let o = run(&[
        "project", "--manifest", s(&m), "--matrix", s(&x), "--out", s(&out), "--pd-only", "--target-lang", "cz",
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let csv = fs::read_to_string(out.join("projection.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 30);
    assert!(csv.lines().skip(1).all(|l| l.contains(",PD,")));
}

#[test]
fn commands_leave_inputs_untouched() {
    let dir = tempfile::tempdir().unwrap();
    let (m, x) = synth(dir.path(), &[]);
    let before = (fs::read(&m).unwrap(), fs::read(&x).unwrap());
    for cmd in ["distances", "probe", "project"] {
        let out = dir.path().join(cmd);
        assert_eq!(code(&run(&[cmd, "--manifest", s(&m), "--matrix", s(&x), "--out", s(&out)])), 0);
    }
    assert_eq!(before, (fs::read(&m).unwrap(), fs::read(&x).unwrap()));
}

#[test]
fn manifest_extra_fields_survive_shift_free_round_trip() {
    let recs = vec![{
        let mut r = RecordingRecord::new("r", "s", "cz", Label::Pd, 0);
        r.extra.insert("updrs".into(), serde_json::json!(17));
        r
    }];
    let m = CorpusManifest::new(recs).unwrap();
    let back = CorpusManifest::from_jsonl(&m.to_jsonl()).unwrap();
    assert_eq!(back.records()[0].extra["updrs"], 17);
}
