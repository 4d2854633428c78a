//! Recording manifest: one JSON object per line binding a matrix row to a
//! speaker, a language and a clinical label.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use super::evec::EmbeddingMatrix;
use crate::error::{Error, Result};

/// Clinical label. PD is the positive class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Label {
    #[serde(rename = "HC")]
    Hc,
    #[serde(rename = "PD")]
    Pd,
}

impl Label {
    pub fn is_positive(self) -> bool {
        self == Label::Pd
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Hc => "HC",
            Label::Pd => "PD",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordingRecord {
    pub recording_id: String,
    pub speaker_id: String,
    pub language: String,
    pub label: Label,
    pub row: usize,
    /// Fields this crate does not interpret; kept so a rewrite is lossless.
    #[serde(flatten)]
    pub extra: Map<String, Value>,
}

impl RecordingRecord {
    pub fn new(
        recording_id: impl Into<String>,
        speaker_id: impl Into<String>,
        language: impl Into<String>,
        label: Label,
        row: usize,
    ) -> Self {
        Self {
            recording_id: recording_id.into(),
            speaker_id: speaker_id.into(),
            language: language.into(),
            label,
            row,
            extra: Map::new(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CorpusManifest {
    records: Vec<RecordingRecord>,
}

impl CorpusManifest {
    /// Checks the manifest-internal invariants: unique recording ids, unique
    /// rows, and one (language, label) pair per speaker.
    pub fn new(records: Vec<RecordingRecord>) -> Result<Self> {
        let mut ids = BTreeSet::new();
        let mut rows = BTreeSet::new();
        let mut speakers: BTreeMap<&str, (&str, Label)> = BTreeMap::new();
        for r in &records {
            if !ids.insert(r.recording_id.as_str()) {
                return Err(Error::ManifestConstraint(format!(
                    "duplicate recording_id {:?}",
                    r.recording_id
                )));
            }
            if !rows.insert(r.row) {
                return Err(Error::ManifestConstraint(format!(
                    "row {} is bound to more than one recording (second: {:?})",
                    r.row, r.recording_id
                )));
            }
            let meta = (r.language.as_str(), r.label);
            match speakers.get(r.speaker_id.as_str()) {
                Some(prev) if *prev != meta => {
                    return Err(Error::ManifestConstraint(format!(
                        "speaker {:?} has conflicting metadata: ({}, {}) vs ({}, {})",
                        r.speaker_id, prev.0, prev.1, meta.0, meta.1
                    )));
                }
                Some(_) => {}
                None => {
                    speakers.insert(&r.speaker_id, meta);
                }
            }
        }
        Ok(Self { records })
    }

    pub fn records(&self) -> &[RecordingRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Parses JSONL text. Blank lines are skipped; line numbers are 1-based.
    pub fn from_jsonl(text: &str) -> Result<Self> {
        let mut records = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let rec: RecordingRecord =
                serde_json::from_str(line).map_err(|e| Error::ManifestParse {
                    line: i + 1,
                    message: e.to_string(),
                })?;
            records.push(rec);
        }
        Self::new(records)
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&serde_json::to_string(r).expect("record serializes"));
            out.push('\n');
        }
        out
    }

    /// Rejects any record whose row does not exist in `matrix`.
    pub fn validate_against(&self, matrix: &EmbeddingMatrix) -> Result<()> {
        for r in &self.records {
            if r.row >= matrix.rows() {
                return Err(Error::ManifestConstraint(format!(
                    "recording {:?} points at row {} but the matrix has {} rows",
                    r.recording_id,
                    r.row,
                    matrix.rows()
                )));
            }
        }
        Ok(())
    }
}

pub fn load_manifest(path: impl AsRef<Path>) -> Result<CorpusManifest> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    CorpusManifest::from_jsonl(&text)
}

pub fn write_manifest(manifest: &CorpusManifest, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, manifest.to_jsonl()).map_err(|e| Error::io(path, e))
}
