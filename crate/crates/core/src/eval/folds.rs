use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{Label, SpeakerEntry, SpeakerTable};
use crate::error::{Error, Result};

const CAP_STREAM: u64 = 1;
const FOLD_STREAM: u64 = 2;

pub(crate) fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Subsamples every (language, label) cell down to the smallest cell size.
/// Selection is uniform without replacement and reproducible per seed.
pub fn cap_classes(table: &SpeakerTable, seed: u64) -> SpeakerTable {
    let mut cells: BTreeMap<(&str, Label), Vec<&str>> = BTreeMap::new();
    for e in table.entries() {
        cells
            .entry((&e.language, e.label))
            .or_default()
            .push(&e.speaker_id);
    }
    let Some(cap) = cells.values().map(Vec::len).min() else {
        return table.clone();
    };
    let mut rng = stream_rng(seed, CAP_STREAM);
    let mut keep = BTreeSet::new();
    for ids in cells.values_mut() {
        ids.shuffle(&mut rng);
        keep.extend(ids.iter().take(cap).copied());
    }
    table.filter(|e| keep.contains(e.speaker_id.as_str()))
}

/// Identity and stratum of one speaker.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SpeakerKey {
    pub speaker_id: String,
    pub language: String,
    pub label: Label,
}

impl From<&SpeakerEntry> for SpeakerKey {
    fn from(e: &SpeakerEntry) -> Self {
        Self {
            speaker_id: e.speaker_id.clone(),
            language: e.language.clone(),
            label: e.label,
        }
    }
}

/// Partition of a speaker set into `k` test folds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub speakers: BTreeMap<String, (String, Label)>,
    pub test_folds: Vec<BTreeSet<String>>,
}

impl FoldPlan {
    pub fn k(&self) -> usize {
        self.test_folds.len()
    }

    pub fn test(&self, fold: usize) -> &BTreeSet<String> {
        &self.test_folds[fold]
    }

    /// Every planned speaker outside test fold `fold`.
    pub fn train(&self, fold: usize) -> BTreeSet<String> {
        let test = &self.test_folds[fold];
        self.speakers
            .keys()
            .filter(|s| !test.contains(*s))
            .cloned()
            .collect()
    }
}

/// Stratified k-fold assignment. Speakers are shuffled within each
/// (language, label) stratum and dealt round-robin, the deal position
/// carrying over between strata so fold totals stay balanced.
pub fn make_folds(speakers: &[SpeakerKey], k: usize, seed: u64) -> Result<FoldPlan> {
    if k < 2 {
        return Err(Error::InvalidConfig(format!("k must be at least 2, got {k}")));
    }
    let mut strata: BTreeMap<(&str, Label), Vec<&str>> = BTreeMap::new();
    let mut index = BTreeMap::new();
    for s in speakers {
        if index
            .insert(s.speaker_id.clone(), (s.language.clone(), s.label))
            .is_some()
        {
            return Err(Error::InvalidInput(format!(
                "speaker {:?} listed twice",
                s.speaker_id
            )));
        }
        strata
            .entry((&s.language, s.label))
            .or_default()
            .push(&s.speaker_id);
    }
    for ((lang, label), ids) in &strata {
        if ids.len() < k {
            return Err(Error::InvalidInput(format!(
                "stratum ({lang}, {label}) has {} speakers, fewer than k = {k}",
                ids.len()
            )));
        }
    }
    let mut rng = stream_rng(seed, FOLD_STREAM);
    let mut test_folds = vec![BTreeSet::new(); k];
    let mut pos = 0;
    for ids in strata.values_mut() {
        ids.sort_unstable();
        ids.shuffle(&mut rng);
        for id in ids.iter() {
            test_folds[pos % k].insert(id.to_string());
            pos += 1;
        }
    }
    Ok(FoldPlan {
        speakers: index,
        test_folds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(cells: &[(&str, Label, usize)]) -> SpeakerTable {
        let mut entries = Vec::new();
        for (lang, label, n) in cells {
            for i in 0..*n {
                entries.push(SpeakerEntry {
                    speaker_id: format!("{lang}-{label}-{i}"),
                    language: lang.to_string(),
                    label: *label,
                    vector: vec![i as f32],
                });
            }
        }
        SpeakerTable::new(1, entries).unwrap()
    }

    fn cell_sizes(t: &SpeakerTable) -> BTreeMap<(String, Label), usize> {
        let mut m = BTreeMap::new();
        for e in t.entries() {
            *m.entry((e.language.clone(), e.label)).or_default() += 1;
        }
        m
    }

    fn keys(n: usize) -> Vec<SpeakerKey> {
        (0..n)
            .map(|i| SpeakerKey {
                speaker_id: format!("s{i:02}"),
                language: "a".into(),
                label: Label::Hc,
            })
            .collect()
    }

    #[test]
    fn balanced_table_unchanged() {
        let t = table(&[("a", Label::Hc, 4), ("a", Label::Pd, 4), ("b", Label::Hc, 4), ("b", Label::Pd, 4)]);
        assert_eq!(cap_classes(&t, 3), t);
    }

    #[test]
    fn caps_to_minimum_cell() {
        let t = table(&[("a", Label::Hc, 10), ("a", Label::Pd, 4), ("b", Label::Hc, 6), ("b", Label::Pd, 4)]);
        let c = cap_classes(&t, 0);
        assert!(cell_sizes(&c).values().all(|&n| n == 4));
        assert_eq!(c.len(), 16);
    }

    #[test]
    fn capping_is_seeded() {
        let t = table(&[("a", Label::Hc, 30), ("a", Label::Pd, 5)]);
        assert_eq!(cap_classes(&t, 1), cap_classes(&t, 1));
        let others: Vec<_> = (2..10).map(|s| cap_classes(&t, s)).collect();
        assert!(others.iter().all(|o| o.len() == 10));
        assert!(others.iter().any(|o| *o != cap_classes(&t, 1)));
    }

    #[test]
    fn ten_speakers_five_folds() {
        let plan = make_folds(&keys(10), 5, 0).unwrap();
        assert!(plan.test_folds.iter().all(|f| f.len() == 2));
        let union: BTreeSet<_> = plan.test_folds.iter().flatten().cloned().collect();
        assert_eq!(union.len(), 10);
        for i in 0..5 {
            assert!(plan.train(i).is_disjoint(plan.test(i)));
            assert_eq!(plan.train(i).len(), 8);
        }
    }

    #[test]
    fn small_stratum_rejected() {
        assert!(make_folds(&keys(4), 5, 0).is_err());
        assert!(make_folds(&keys(4), 1, 0).is_err());
    }
}
