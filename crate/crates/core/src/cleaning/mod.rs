//! Corpus cleaning: exact and MinHash near-duplicate removal, minimum length,
//! language verification and well-formedness.
//!
//! Every filter returns a subsequence of its input in the original order.

mod langid;
mod minhash;
mod normalize;
mod wellformed;

use std::collections::HashSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use langid::{detector_by_name, LanguageDetector, TrigramDetector};
pub use minhash::{minhash_signature, shingle_hashes, MinHashSignature, MinHasher, NearDupIndex};
pub use normalize::normalize_text;
pub use wellformed::{HeuristicWellformedness, WellformednessFilter};

use crate::corpus::{Corpus, Segment};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CleaningConfig {
    /// Segments whose source side has fewer whitespace tokens are dropped.
    pub min_words: usize,
    /// Estimated Jaccard at or above which a later segment counts as a near duplicate.
    pub near_dup_threshold: f64,
    pub num_permutations: usize,
    /// Word-shingle width.
    pub shingle_size: usize,
    pub bands: usize,
    pub rows_per_band: usize,
    pub source_lang: String,
    pub target_lang: String,
    pub detector: String,
    pub seed: u64,
}

impl Default for CleaningConfig {
    fn default() -> Self {
        CleaningConfig {
            min_words: 8,
            near_dup_threshold: 0.8,
            num_permutations: 128,
            shingle_size: 3,
            bands: 32,
            rows_per_band: 4,
            source_lang: "it".to_string(),
            target_lang: "en".to_string(),
            detector: "trigram".to_string(),
            seed: 0x5eed,
        }
    }
}

impl CleaningConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.near_dup_threshold) {
            return Err(Error::Config(format!(
                "near_dup_threshold must lie in [0, 1], got {}",
                self.near_dup_threshold
            )));
        }
        if self.min_words == 0 {
            return Err(Error::Config("min_words must be at least 1".into()));
        }
        if self.num_permutations == 0 || self.shingle_size == 0 {
            return Err(Error::Config(
                "num_permutations and shingle_size must be positive".into(),
            ));
        }
        if self.bands * self.rows_per_band != self.num_permutations {
            return Err(Error::Config(format!(
                "bands × rows_per_band ({} × {}) must equal num_permutations ({})",
                self.bands, self.rows_per_band, self.num_permutations
            )));
        }
        Ok(())
    }
}

/// Keeps the first occurrence of each normalized `(src, tgt)` pair.
pub fn exact_dedup(corpus: &Corpus) -> Corpus {
    let mut seen = HashSet::new();
    corpus.retain_by(|s| seen.insert((normalize_text(&s.source_text), normalize_text(&s.target_text))))
}

/// Greedy near-duplicate removal on the source side, in corpus order.
///
/// Expects exact duplicates to be gone already (not enforced). Signatures are
/// computed in parallel; keep/drop decisions are committed sequentially.
pub fn near_dedup(corpus: &Corpus, config: &CleaningConfig) -> Corpus {
    let hasher = MinHasher::from_config(config);
    let signatures: Vec<MinHashSignature> = corpus
        .segments
        .par_iter()
        .map(|s| hasher.signature(&s.source_text))
        .collect();
    let mut index = NearDupIndex::new(
        config.num_permutations,
        config.bands,
        config.rows_per_band,
        config.near_dup_threshold,
    );
    let keep: Vec<bool> = signatures
        .into_iter()
        .map(|sig| index.insert_if_novel(sig))
        .collect();
    let mut it = keep.into_iter();
    corpus.retain_by(|_| it.next().unwrap_or(false))
}

pub fn word_count(text: &str) -> usize {
    text.split_whitespace().count()
}

pub fn length_filter(corpus: &Corpus, config: &CleaningConfig) -> Corpus {
    corpus.retain_by(|s| word_count(&s.source_text) >= config.min_words)
}

pub fn language_filter(
    corpus: &Corpus,
    config: &CleaningConfig,
    detector: &dyn LanguageDetector,
) -> Result<Corpus> {
    for code in [&config.source_lang, &config.target_lang] {
        if !detector.supports(code) {
            return Err(Error::Config(format!(
                "language detector cannot identify `{code}`"
            )));
        }
    }
    let keep: Vec<bool> = corpus
        .segments
        .par_iter()
        .map(|s| {
            detector.detect(&s.source_text).as_deref() == Some(config.source_lang.as_str())
                && detector.detect(&s.target_text).as_deref() == Some(config.target_lang.as_str())
        })
        .collect();
    let mut it = keep.into_iter();
    Ok(corpus.retain_by(|_| it.next().unwrap_or(false)))
}

pub fn wellformedness_filter(corpus: &Corpus, filter: &dyn WellformednessFilter) -> Corpus {
    let keep: Vec<bool> = corpus
        .segments
        .par_iter()
        .map(|s: &Segment| filter.is_well_formed(&s.source_text) && filter.is_well_formed(&s.target_text))
        .collect();
    let mut it = keep.into_iter();
    corpus.retain_by(|_| it.next().unwrap_or(false))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterStep {
    pub filter: String,
    pub input: usize,
    pub output: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CleaningReport {
    pub raw: usize,
    pub clean: usize,
    pub steps: Vec<FilterStep>,
}

/// Runs exact dedup → near dedup → length → well-formedness → language.
pub fn clean_corpus(
    corpus: &Corpus,
    config: &CleaningConfig,
    detector: &dyn LanguageDetector,
    wellformed: &dyn WellformednessFilter,
) -> Result<(Corpus, CleaningReport)> {
    config.validate()?;
    let mut steps = Vec::new();
    let mut record = |name: &str, before: &Corpus, after: Corpus| {
        steps.push(FilterStep {
            filter: name.to_string(),
            input: before.len(),
            output: after.len(),
        });
        after
    };
    let c = record("exact_dedup", corpus, exact_dedup(corpus));
    let c = record("near_dedup", &c, near_dedup(&c, config));
    let c = record("length", &c, length_filter(&c, config));
    let c = record("wellformedness", &c, wellformedness_filter(&c, wellformed));
    let filtered = language_filter(&c, config, detector)?;
    let c = record("language", &c, filtered);
    let report = CleaningReport {
        raw: corpus.len(),
        clean: c.len(),
        steps,
    };
    Ok((c, report))
}
