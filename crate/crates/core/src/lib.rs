//! Corpus-free morpheme lexicon refinement and morphology-aware evaluation
//! of BPE vocabularies.
//!
//! The pipeline turns a noisy list of candidate stems and affixes into a
//! compact lexicon of atomic morphemes ([`imdp`]), which then serves as the
//! reference for scoring tokenizers ([`bpe`], [`metrics`], [`curve`]).

pub mod bpe;
pub mod curve;
pub mod data;
pub mod error;
pub mod imdp;
pub mod ingest;
pub mod lexicon;
pub mod metrics;
pub mod text;

pub use error::{Error, Result};
