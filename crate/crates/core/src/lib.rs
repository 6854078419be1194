//! Building blocks for mining a crisis-domain Italian–English parallel corpus
//! out of large general corpora, turning it into SFT/DPO training data, and
//! scoring translations.
//!
//! The pipeline stages live in separate modules:
//!
//! - [`corpus`]: segment/corpus types, JSONL and TSV I/O, stage manifests
//! - [`cleaning`]: exact and MinHash deduplication, length, language and
//!   well-formedness filters
//! - [`embedding`]: embedding providers, the on-disk vector format and cache
//! - [`retrieval`]: k-means over reference embeddings and max-centroid top-K search
//! - [`threshold`]: rank partitions, stratified sampling, label import and the
//!   retention cutoff
//! - [`dataset`]: paragraph grouping for SFT and gated preference pairs for DPO
//! - [`readability`]: classical readability indices
//! - [`mteval`]: BLEU, chrF, MQM scoring, agreement statistics

pub mod cleaning;
pub mod corpus;
pub mod dataset;
pub mod digest;
pub mod embedding;
mod error;
pub mod mteval;
pub mod readability;
pub mod retrieval;
pub mod threshold;

pub use error::{Error, Result};
