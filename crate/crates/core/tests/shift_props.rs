use std::collections::BTreeSet;

use langshift::corpus::{aggregate_speakers, Label, SpeakerEntry, SpeakerTable};
use langshift::shift::{
    apply_language_shift, centroid_distance, centroid_distance_matrix, estimate_centroids,
    shift_vector,
};
use langshift::synth::{generate, SynthSpec};
use proptest::prelude::*;

fn vec_of(dim: usize) -> impl Strategy<Value = Vec<f32>> {
    prop::collection::vec(-50.0f32..50.0, dim)
}

fn small_table() -> impl Strategy<Value = SpeakerTable> {
    // Three languages, 2..5 HC and 1..4 PD speakers each, dim 3.
    prop::collection::vec((2usize..5, 1usize..4), 3).prop_flat_map(|sizes| {
        let total: usize = sizes.iter().map(|(h, p)| h + p).sum();
        prop::collection::vec(vec_of(3), total).prop_map(move |vecs| {
            let mut entries = Vec::new();
            let mut it = vecs.into_iter();
            for (li, (h, p)) in sizes.iter().enumerate() {
                let lang = ["a", "b", "c"][li];
                for i in 0..h + p {
                    entries.push(SpeakerEntry {
                        speaker_id: format!("{lang}{i}"),
                        language: lang.into(),
                        label: if i < *h { Label::Hc } else { Label::Pd },
                        vector: it.next().unwrap(),
                    });
                }
            }
            SpeakerTable::new(3, entries).unwrap()
        })
    })
}

proptest! {
    #[test]
    fn shift_moves_by_centroid_offset(t in small_table()) {
        let c = estimate_centroids(&t, &t.speaker_ids()).unwrap();
        for target in ["a", "b", "c"] {
            let s = apply_language_shift(&t, &c, target).unwrap();
            let mu_t = &c.get(target).unwrap().vector;
            for (before, after) in t.entries().iter().zip(s.table.entries()) {
                if before.language == target {
                    let a: Vec<u32> = before.vector.iter().map(|v| v.to_bits()).collect();
                    let b: Vec<u32> = after.vector.iter().map(|v| v.to_bits()).collect();
                    prop_assert_eq!(a, b);
                    continue;
                }
                let mu_s = &c.get(&before.language).unwrap().vector;
                for j in 0..3 {
                    let moved = f64::from(after.vector[j]) - f64::from(before.vector[j]);
                    let want = f64::from(mu_t[j]) - f64::from(mu_s[j]);
                    prop_assert!((moved - want).abs() <= 1e-5, "{moved} vs {want}");
                }
            }
        }
    }

    #[test]
    fn centroids_ignore_pd_and_unmasked(t in small_table(), bump in -1e3f32..1e3) {
        // Mask out the first HC speaker of every language.
        let mask: BTreeSet<String> = t
            .entries()
            .iter()
            .filter(|e| !e.speaker_id.ends_with('0'))
            .map(|e| e.speaker_id.clone())
            .collect();
        let before = estimate_centroids(&t, &mask).unwrap();
        let perturbed = SpeakerTable::new(
            3,
            t.entries()
                .iter()
                .cloned()
                .map(|mut e| {
                    if e.label == Label::Pd || !mask.contains(&e.speaker_id) {
                        e.vector.iter_mut().for_each(|v| *v += bump);
                    }
                    e
                })
                .collect(),
        )
        .unwrap();
        prop_assert_eq!(before, estimate_centroids(&perturbed, &mask).unwrap());
    }

    #[test]
    fn shifting_via_a_middle_language_composes(t in small_table()) {
        let c = estimate_centroids(&t, &t.speaker_ids()).unwrap();
        let mu = |l: &str| c.get(l).unwrap().vector.clone();
        for e in t.entries().iter().filter(|e| e.language == "a") {
            let direct = shift_vector(&e.vector, &mu("a"), &mu("c")).unwrap();
            let mid = shift_vector(&e.vector, &mu("a"), &mu("b")).unwrap();
            let two = shift_vector(&mid, &mu("b"), &mu("c")).unwrap();
            for (x, y) in direct.iter().zip(&two) {
                prop_assert!((x - y).abs() <= 1e-4);
            }
        }
    }

    #[test]
    fn distance_is_symmetric(a in vec_of(8), b in vec_of(8)) {
        prop_assert_eq!(centroid_distance(&a, &b).unwrap(), centroid_distance(&b, &a).unwrap());
        prop_assert_eq!(centroid_distance(&a, &a).unwrap(), 0.0);
    }

    #[test]
    fn distance_matrix_matches_pairwise_loop(t in small_table()) {
        let c = estimate_centroids(&t, &t.speaker_ids()).unwrap();
        let m = centroid_distance_matrix(&c).unwrap();
        let langs: Vec<&str> = c.languages().collect();
        for a in &langs {
            for b in &langs {
                let (va, vb) = (&c.get(a).unwrap().vector, &c.get(b).unwrap().vector);
                let mut ss = 0.0f64;
                for k in 0..va.len() {
                    let d = f64::from(va[k]) - f64::from(vb[k]);
                    ss += d * d;
                }
                prop_assert!((m.get(a, b).unwrap() - ss.sqrt()).abs() <= 1e-12);
            }
        }
        prop_assert_eq!(m.pairs().len(), 3);
    }
}

fn synth_table(spec: &SynthSpec) -> SpeakerTable {
    let c = generate(spec).unwrap();
    aggregate_speakers(&c.manifest, &c.matrix).unwrap()
}

fn max_spread(t: &SpeakerTable) -> f64 {
    let c = estimate_centroids(t, &t.speaker_ids()).unwrap();
    let m = centroid_distance_matrix(&c).unwrap();
    m.pairs().iter().map(|p| p.2).fold(0.0, f64::max)
}

#[test]
fn shift_collapses_language_spread_on_synthetic_corpus() {
    let t = synth_table(&SynthSpec { seed: 7, ..Default::default() });
    let pre = max_spread(&t);
    let c = estimate_centroids(&t, &t.speaker_ids()).unwrap();
    for target in ["cz", "de", "es"] {
        let shifted = apply_language_shift(&t, &c, target).unwrap().table;
        let post = max_spread(&shifted);
        assert!(post < 0.1 * pre, "target {target}: {post} vs {pre}");
    }
}

#[test]
fn shifted_source_hc_mean_lands_on_target_centroid() {
    let t = synth_table(&SynthSpec { seed: 7, ..Default::default() });
    // Training mask: every speaker whose index is not a multiple of 5.
    let mask: BTreeSet<String> = t
        .speaker_ids()
        .into_iter()
        .filter(|id| !id.ends_with('0') && !id.ends_with('5'))
        .collect();
    let c = estimate_centroids(&t, &mask).unwrap();
    let s = apply_language_shift(&t, &c, "de").unwrap();
    let mu_t = &c.get("de").unwrap().vector;
    for src in ["cz", "es"] {
        let hc: Vec<&SpeakerEntry> = s
            .table
            .entries()
            .iter()
            .filter(|e| e.language == src && e.label == Label::Hc && mask.contains(&e.speaker_id))
            .collect();
        for j in 0..t.dim() {
            let mean = hc.iter().map(|e| f64::from(e.vector[j])).sum::<f64>() / hc.len() as f64;
            let want = f64::from(mu_t[j]);
            assert!((mean - want).abs() <= 1e-5 * want.abs().max(1.0), "{src}[{j}]");
        }
    }
    assert_eq!(s.source_languages.len(), t.len());
    assert_eq!(s.centroid_set_id, c.id());
}
