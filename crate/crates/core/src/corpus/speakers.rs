use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::evec::EmbeddingMatrix;
use super::manifest::{CorpusManifest, Label, RecordingRecord};
use crate::error::{check_dim, Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeakerEntry {
    pub speaker_id: String,
    pub language: String,
    pub label: Label,
    pub vector: Vec<f32>,
}

/// One aggregated embedding per speaker, sorted by `speaker_id`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeakerTable {
    dim: usize,
    entries: Vec<SpeakerEntry>,
}

impl SpeakerTable {
    pub fn new(dim: usize, mut entries: Vec<SpeakerEntry>) -> Result<Self> {
        entries.sort_by(|a, b| a.speaker_id.cmp(&b.speaker_id));
        for w in entries.windows(2) {
            if w[0].speaker_id == w[1].speaker_id {
                return Err(Error::InvalidInput(format!(
                    "duplicate speaker {:?}",
                    w[0].speaker_id
                )));
            }
        }
        for e in &entries {
            check_dim(dim, e.vector.len())?;
            if e.vector.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidInput(format!(
                    "speaker {:?} has a non-finite coordinate",
                    e.speaker_id
                )));
            }
        }
        Ok(Self { dim, entries })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[SpeakerEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, speaker_id: &str) -> Option<&SpeakerEntry> {
        self.entries
            .binary_search_by(|e| e.speaker_id.as_str().cmp(speaker_id))
            .ok()
            .map(|i| &self.entries[i])
    }

    pub fn languages(&self) -> BTreeSet<String> {
        self.entries.iter().map(|e| e.language.clone()).collect()
    }

    pub fn speaker_ids(&self) -> BTreeSet<String> {
        self.entries.iter().map(|e| e.speaker_id.clone()).collect()
    }

    /// Keeps entries matching `keep`; order and dim are preserved.
    pub fn filter(&self, mut keep: impl FnMut(&SpeakerEntry) -> bool) -> SpeakerTable {
        SpeakerTable {
            dim: self.dim,
            entries: self.entries.iter().filter(|e| keep(e)).cloned().collect(),
        }
    }

    pub(crate) fn from_sorted_unchecked(dim: usize, entries: Vec<SpeakerEntry>) -> Self {
        Self { dim, entries }
    }

    /// Speaker-level corpus files: one matrix row per speaker, with the
    /// speaker id doubling as recording id.
    pub fn to_corpus(&self) -> Result<(CorpusManifest, EmbeddingMatrix)> {
        let records = self
            .entries
            .iter()
            .enumerate()
            .map(|(row, e)| {
                RecordingRecord::new(&e.speaker_id, &e.speaker_id, &e.language, e.label, row)
            })
            .collect();
        let rows: Vec<&[f32]> = self.entries.iter().map(|e| e.vector.as_slice()).collect();
        Ok((
            CorpusManifest::new(records)?,
            EmbeddingMatrix::from_rows(self.dim, &rows)?,
        ))
    }
}

/// Averages each speaker's recordings (unweighted, accumulated in f64).
pub fn aggregate_speakers(
    manifest: &CorpusManifest,
    matrix: &EmbeddingMatrix,
) -> Result<SpeakerTable> {
    manifest.validate_against(matrix)?;
    let dim = matrix.dim();
    let mut acc: BTreeMap<&str, (&RecordingRecord, Vec<f64>, usize)> = BTreeMap::new();
    for rec in manifest.records() {
        let slot = acc
            .entry(rec.speaker_id.as_str())
            .or_insert_with(|| (rec, vec![0.0; dim], 0));
        for (s, v) in slot.1.iter_mut().zip(matrix.row(rec.row)) {
            *s += f64::from(*v);
        }
        slot.2 += 1;
    }
    let entries = acc
        .into_values()
        .map(|(rec, sum, n)| SpeakerEntry {
            speaker_id: rec.speaker_id.clone(),
            language: rec.language.clone(),
            label: rec.label,
            vector: sum.iter().map(|s| (s / n as f64) as f32).collect(),
        })
        .collect();
    Ok(SpeakerTable::from_sorted_unchecked(dim, entries))
}
