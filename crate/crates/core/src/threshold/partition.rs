use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;
use crate::retrieval::RankedCandidate;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    /// 1-based.
    pub index: usize,
    /// Inclusive rank bounds.
    pub rank_range: (usize, usize),
    pub member_ids: Vec<String>,
}

impl Partition {
    pub fn len(&self) -> usize {
        self.member_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.member_ids.is_empty()
    }
}

/// Splits the ranked list into contiguous partitions whose sizes differ by at
/// most one; the first `n mod p` partitions take the extra item.
pub fn make_partitions(ranked: &[RankedCandidate], num_partitions: usize) -> Result<Vec<Partition>> {
    let n = ranked.len();
    if num_partitions == 0 || num_partitions > n {
        return Err(Error::Param(format!(
            "cannot split {n} ranked items into {num_partitions} partitions"
        )));
    }
    let base = n / num_partitions;
    let extra = n % num_partitions;
    let mut out = Vec::with_capacity(num_partitions);
    let mut start = 0;
    for p in 0..num_partitions {
        let size = base + usize::from(p < extra);
        let members = &ranked[start..start + size];
        out.push(Partition {
            index: p + 1,
            rank_range: (start + 1, start + size),
            member_ids: members.iter().map(|r| r.segment_id.clone()).collect(),
        });
        start += size;
    }
    Ok(out)
}

/// One item of an annotation batch.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BatchItem {
    pub segment_id: String,
    pub partition: usize,
    pub rank: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub src: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tgt: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct AnnotationBatch {
    pub items: Vec<BatchItem>,
}

impl AnnotationBatch {
    pub fn contains(&self, id: &str) -> bool {
        self.items.iter().any(|it| it.segment_id == id)
    }

    /// Fills in segment texts from `corpus`; ids not found stay empty.
    pub fn attach_texts(&mut self, corpus: &Corpus) {
        let by_id: std::collections::HashMap<&str, _> =
            corpus.segments.iter().map(|s| (s.id.as_str(), s)).collect();
        for it in &mut self.items {
            if let Some(seg) = by_id.get(it.segment_id.as_str()) {
                it.src = Some(seg.source_text.clone());
                it.tgt = Some(seg.target_text.clone());
            }
        }
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for it in &self.items {
            out.push_str(&serde_json::to_string(it).expect("batch items serialize"));
            out.push('\n');
        }
        out
    }

    pub fn from_jsonl(text: &str) -> Result<Self> {
        let mut items = Vec::new();
        let mut seen = std::collections::HashSet::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let it: BatchItem =
                serde_json::from_str(line).map_err(|e| Error::parse("batch", i + 1, e.to_string()))?;
            if !seen.insert(it.segment_id.clone()) {
                return Err(Error::parse("batch", i + 1, format!("duplicate id `{}`", it.segment_id)));
            }
            items.push(it);
        }
        Ok(AnnotationBatch { items })
    }
}

/// Seeded uniform sample without replacement, `per_partition` items from
/// each partition, listed by rank within each partition.
pub fn sample_for_annotation(partitions: &[Partition], per_partition: usize, seed: u64) -> Result<AnnotationBatch> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut items = Vec::with_capacity(partitions.len() * per_partition);
    for p in partitions {
        if per_partition > p.len() {
            return Err(Error::Param(format!(
                "cannot sample {per_partition} items from partition {} of size {}",
                p.index,
                p.len()
            )));
        }
        let mut picked = rand::seq::index::sample(&mut rng, p.len(), per_partition).into_vec();
        picked.sort_unstable();
        for offset in picked {
            items.push(BatchItem {
                segment_id: p.member_ids[offset].clone(),
                partition: p.index,
                rank: p.rank_range.0 + offset,
                src: None,
                tgt: None,
            });
        }
    }
    Ok(AnnotationBatch { items })
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn ranked(n: usize) -> Vec<RankedCandidate> {
        (0..n)
            .map(|i| RankedCandidate {
                segment_id: format!("g:{i:05}"),
                score: 1.0 - i as f64 / n as f64,
                best_centroid: 0,
                rank: i + 1,
            })
            .collect()
    }

    #[test]
    fn fifty_thousand_into_six() {
        let parts = make_partitions(&ranked(50_000), 6).unwrap();
        let sizes: Vec<usize> = parts.iter().map(Partition::len).collect();
        assert_eq!(sizes, [8334, 8334, 8333, 8333, 8333, 8333]);
        assert_eq!(parts[0].rank_range, (1, 8334));
        assert_eq!(parts[5].rank_range, (41_668, 50_000));
        for w in parts.windows(2) {
            assert_eq!(w[0].rank_range.1 + 1, w[1].rank_range.0);
        }
    }

    #[test]
    fn single_and_singleton_partitions() {
        let one = make_partitions(&ranked(10), 1).unwrap();
        assert_eq!(one.len(), 1);
        assert_eq!(one[0].rank_range, (1, 10));
        let ten = make_partitions(&ranked(10), 10).unwrap();
        assert!(ten.iter().all(|p| p.len() == 1));
        assert!(make_partitions(&ranked(10), 11).is_err());
        assert!(make_partitions(&ranked(10), 0).is_err());
    }

    #[test]
    fn sample_fifty_per_partition() {
        let parts = make_partitions(&ranked(50_000), 6).unwrap();
        let batch = sample_for_annotation(&parts, 50, 42).unwrap();
        assert_eq!(batch.items.len(), 300);
        let unique: std::collections::HashSet<_> = batch.items.iter().map(|i| &i.segment_id).collect();
        assert_eq!(unique.len(), 300);
        for p in 1..=6 {
            assert_eq!(batch.items.iter().filter(|i| i.partition == p).count(), 50);
        }
        for it in &batch.items {
            let p = &parts[it.partition - 1];
            assert!(p.rank_range.0 <= it.rank && it.rank <= p.rank_range.1);
            assert_eq!(p.member_ids[it.rank - p.rank_range.0], it.segment_id);
        }
        assert_eq!(sample_for_annotation(&parts, 50, 42).unwrap(), batch);
        assert_ne!(sample_for_annotation(&parts, 50, 43).unwrap(), batch);
    }

    #[test]
    fn full_partition_sample_and_oversampling() {
        let parts = make_partitions(&ranked(12), 3).unwrap();
        let batch = sample_for_annotation(&parts, 4, 1).unwrap();
        assert_eq!(batch.items.len(), 12);
        assert!(matches!(sample_for_annotation(&parts, 5, 1), Err(Error::Param(_))));
    }
}
