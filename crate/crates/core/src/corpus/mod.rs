//! Corpus storage: the EVEC matrix format, the JSONL recording manifest and
//! speaker-level aggregation.

mod evec;
mod manifest;
mod speakers;

pub use evec::{
    decode_matrix, encode_matrix, load_matrix, write_matrix, EmbeddingMatrix, HEADER_LEN, MAGIC,
    VERSION,
};
pub use manifest::{load_manifest, write_manifest, CorpusManifest, Label, RecordingRecord};
pub use speakers::{aggregate_speakers, SpeakerEntry, SpeakerTable};

use std::path::Path;

use crate::error::Result;

/// Loads a manifest/matrix pair, validates them against each other and
/// aggregates to speaker level.
pub fn load_speaker_table(
    manifest: impl AsRef<Path>,
    matrix: impl AsRef<Path>,
) -> Result<SpeakerTable> {
    let manifest = load_manifest(manifest)?;
    let matrix = load_matrix(matrix)?;
    aggregate_speakers(&manifest, &matrix)
}
