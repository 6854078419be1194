//! MinHash signatures over word shingles and LSH-banded near-duplicate search.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use xxhash_rust::xxh3::xxh3_64;

use super::normalize::normalize_text;
use super::CleaningConfig;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MinHashSignature {
    pub values: Vec<u64>,
    pub num_permutations: usize,
    pub shingle_size: usize,
}

impl MinHashSignature {
    /// Fraction of positions on which the two signatures agree.
    pub fn estimate_jaccard(&self, other: &MinHashSignature) -> f64 {
        debug_assert_eq!(self.values.len(), other.values.len());
        if self.values.is_empty() {
            return 0.0;
        }
        let same = self
            .values
            .iter()
            .zip(&other.values)
            .filter(|(a, b)| a == b)
            .count();
        same as f64 / self.values.len() as f64
    }

    fn matches(&self, other: &MinHashSignature) -> usize {
        self.values
            .iter()
            .zip(&other.values)
            .filter(|(a, b)| a == b)
            .count()
    }
}

/// Family of `(a * x + b) mod 2^64` hash functions with odd multipliers.
///
/// Each member is a bijection on `u64`, i.e. a permutation of the hashed
/// shingle universe.
#[derive(Debug, Clone)]
pub struct MinHasher {
    coefficients: Vec<(u64, u64)>,
    shingle_size: usize,
}

impl MinHasher {
    pub fn new(num_permutations: usize, shingle_size: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let coefficients = (0..num_permutations)
            .map(|_| (rng.random::<u64>() | 1, rng.random::<u64>()))
            .collect();
        MinHasher {
            coefficients,
            shingle_size: shingle_size.max(1),
        }
    }

    pub fn from_config(config: &CleaningConfig) -> Self {
        Self::new(config.num_permutations, config.shingle_size, config.seed)
    }

    pub fn num_permutations(&self) -> usize {
        self.coefficients.len()
    }

    /// Signature of a pre-hashed shingle set.
    pub fn signature_of_hashes(&self, shingles: impl IntoIterator<Item = u64> + Clone) -> MinHashSignature {
        let values = self
            .coefficients
            .iter()
            .map(|&(a, b)| {
                shingles
                    .clone()
                    .into_iter()
                    .map(|x| a.wrapping_mul(x).wrapping_add(b))
                    .min()
                    .unwrap_or(u64::MAX)
            })
            .collect();
        MinHashSignature {
            values,
            num_permutations: self.coefficients.len(),
            shingle_size: self.shingle_size,
        }
    }

    pub fn signature(&self, text: &str) -> MinHashSignature {
        let shingles = shingle_hashes(text, self.shingle_size);
        self.signature_of_hashes(shingles.iter().copied())
    }
}

/// Hashes of the lowercased word `width`-grams of `text`. Texts shorter than
/// one full shingle fall back to single-word shingles.
pub fn shingle_hashes(text: &str, width: usize) -> Vec<u64> {
    let norm = normalize_text(text).to_lowercase();
    let words: Vec<&str> = norm.split(' ').filter(|w| !w.is_empty()).collect();
    let width = if words.len() < width { 1 } else { width.max(1) };
    let mut hashes: Vec<u64> = words
        .windows(width)
        .map(|w| xxh3_64(w.join("\u{1f}").as_bytes()))
        .collect();
    hashes.sort_unstable();
    hashes.dedup();
    hashes
}

pub fn minhash_signature(text: &str, config: &CleaningConfig) -> MinHashSignature {
    MinHasher::from_config(config).signature(text)
}

/// Greedy near-duplicate index: a signature is accepted unless it matches an
/// already accepted one at or above the threshold.
///
/// Candidates come from LSH buckets (`bands × rows`). When
/// `num_permutations − min_matches < bands`, any pair
/// above the threshold must agree on at least one full band, so bucket lookup
/// finds exactly the pairs an all-pairs scan would. Below that bound the index
/// scans every accepted signature instead.
pub struct NearDupIndex {
    bands: usize,
    rows: usize,
    min_matches: usize,
    exhaustive: bool,
    accepted: Vec<MinHashSignature>,
    buckets: HashMap<(usize, u64), Vec<usize>>,
}

impl NearDupIndex {
    pub fn new(num_permutations: usize, bands: usize, rows: usize, threshold: f64) -> Self {
        // smallest agreement count m with m / n >= threshold, matching estimate_jaccard
        let min_matches = (0..=num_permutations)
            .find(|&m| m as f64 / num_permutations as f64 >= threshold)
            .unwrap_or(num_permutations + 1);
        let max_mismatches = num_permutations.saturating_sub(min_matches);
        NearDupIndex {
            bands,
            rows,
            min_matches,
            exhaustive: max_mismatches >= bands || bands * rows != num_permutations,
            accepted: Vec::new(),
            buckets: HashMap::new(),
        }
    }

    pub fn uses_lsh(&self) -> bool {
        !self.exhaustive
    }

    fn band_keys<'a>(&'a self, sig: &'a MinHashSignature) -> impl Iterator<Item = (usize, u64)> + 'a {
        sig.values.chunks(self.rows).take(self.bands).enumerate().map(|(b, chunk)| {
            let mut bytes = Vec::with_capacity(chunk.len() * 8);
            for v in chunk {
                bytes.extend_from_slice(&v.to_le_bytes());
            }
            (b, xxh3_64(&bytes))
        })
    }

    /// Index of an accepted signature similar to `sig`, if any.
    pub fn find_similar(&self, sig: &MinHashSignature) -> Option<usize> {
        if self.exhaustive {
            return self
                .accepted
                .iter()
                .position(|other| sig.matches(other) >= self.min_matches);
        }
        let mut best: Option<usize> = None;
        for key in self.band_keys(sig) {
            if let Some(cands) = self.buckets.get(&key) {
                for &c in cands {
                    if best.is_some_and(|b| b <= c) {
                        continue;
                    }
                    if sig.matches(&self.accepted[c]) >= self.min_matches {
                        best = Some(c);
                    }
                }
            }
        }
        best
    }

    /// Accepts `sig` unless it is a near duplicate; returns whether it was accepted.
    pub fn insert_if_novel(&mut self, sig: MinHashSignature) -> bool {
        if self.find_similar(&sig).is_some() {
            return false;
        }
        let idx = self.accepted.len();
        if !self.exhaustive {
            let keys: Vec<_> = self.band_keys(&sig).collect();
            for key in keys {
                self.buckets.entry(key).or_default().push(idx);
            }
        }
        self.accepted.push(sig);
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    fn exact_jaccard(a: &[u64], b: &[u64]) -> f64 {
        let a: HashSet<_> = a.iter().collect();
        let b: HashSet<_> = b.iter().collect();
        let inter = a.intersection(&b).count();
        let union = a.union(&b).count();
        if union == 0 {
            0.0
        } else {
            inter as f64 / union as f64
        }
    }

    #[test]
    fn identical_texts_identical_signatures() {
        let cfg = CleaningConfig::default();
        let a = minhash_signature("allerta meteo per forti piogge in Liguria", &cfg);
        let b = minhash_signature("allerta meteo per forti piogge in Liguria", &cfg);
        assert_eq!(a, b);
        assert_eq!(a.values.len(), 128);
    }

    #[test]
    fn disjoint_vocabulary_near_zero() {
        let cfg = CleaningConfig::default();
        let a = minhash_signature("uno due tre quattro cinque sei sette otto", &cfg);
        let b = minhash_signature("alpha beta gamma delta epsilon zeta eta theta", &cfg);
        assert_eq!(
            exact_jaccard(&shingle_hashes("uno due tre quattro cinque sei sette otto", 3),
                          &shingle_hashes("alpha beta gamma delta epsilon zeta eta theta", 3)),
            0.0
        );
        assert!(a.estimate_jaccard(&b) < 0.1);
    }

    #[test]
    fn half_overlap_estimate() {
        // 40 shared, 20 + 20 private: exact Jaccard 40 / 80
        let shared: Vec<u64> = (0..40).map(|i| xxh3_64(format!("s{i}").as_bytes())).collect();
        let only_a: Vec<u64> = (0..20).map(|i| xxh3_64(format!("a{i}").as_bytes())).collect();
        let only_b: Vec<u64> = (0..20).map(|i| xxh3_64(format!("b{i}").as_bytes())).collect();
        let a: Vec<u64> = shared.iter().chain(&only_a).copied().collect();
        let b: Vec<u64> = shared.iter().chain(&only_b).copied().collect();
        assert_eq!(exact_jaccard(&a, &b), 0.5);
        let h = MinHasher::new(128, 3, 7);
        let est = h
            .signature_of_hashes(a.iter().copied())
            .estimate_jaccard(&h.signature_of_hashes(b.iter().copied()));
        assert!((est - 0.5).abs() <= 0.15, "estimate {est}");
    }

    #[test]
    fn short_text_falls_back_to_unigrams() {
        assert_eq!(shingle_hashes("allerta rossa", 3).len(), 2);
        assert_eq!(shingle_hashes("a b c d", 3).len(), 2);
    }

    #[test]
    fn lsh_is_exact_above_pigeonhole_bound() {
        assert!(NearDupIndex::new(128, 32, 4, 0.8).uses_lsh());
        assert!(!NearDupIndex::new(128, 32, 4, 0.5).uses_lsh());
    }
}
