//! Centroid-based language shift for speech embeddings, and the evaluation
//! protocol for cross-lingual dysarthria (PD vs. HC) detection built on it.
//!
//! - [`corpus`]: EVEC matrices, JSONL manifests, speaker aggregation
//! - [`shift`]: HC-only centroids, the language shift, centroid distances
//! - [`linear`]: logistic regression, one-vs-rest linear SVM, z-normalizer
//! - [`eval`]: capping, stratified folds, threshold selection, experiments
//! - [`analysis`]: language-identity probe and PCA projection
//! - [`synth`]: synthetic corpora with known ground truth

pub mod analysis;
pub mod corpus;
pub mod error;
pub mod eval;
pub mod linear;
pub mod shift;
pub mod synth;

pub use error::{Error, Result};
