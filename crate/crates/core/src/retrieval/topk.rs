use std::cmp::Ordering;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::kmeans::CentroidSet;
use crate::embedding::{dot, unit64, EmbeddingMatrix};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedCandidate {
    pub segment_id: String,
    /// Maximum cosine similarity over all centroids.
    pub score: f64,
    pub best_centroid: usize,
    /// 1-based.
    pub rank: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Retrieval {
    pub ranked: Vec<RankedCandidate>,
    /// `top_k` exceeded the number of candidates; everything was returned.
    pub truncated: bool,
}

/// Max-similarity search over a fixed set of query centroids.
pub trait CentroidIndex {
    fn top_k(&self, candidates: &EmbeddingMatrix, top_k: usize) -> Result<Retrieval>;
}

/// Exhaustive scan with per-chunk partial selection.
pub struct FlatIndex {
    centroids: Vec<Vec<f64>>,
    dim: usize,
}

impl FlatIndex {
    pub fn new(set: &CentroidSet) -> Result<Self> {
        let centroids = set
            .centroids
            .iter()
            .enumerate()
            .map(|(j, c)| unit64(c).ok_or_else(|| Error::Domain(format!("centroid {j} is the zero vector"))))
            .collect::<Result<Vec<_>>>()?;
        Ok(FlatIndex {
            centroids,
            dim: set.dim,
        })
    }

    fn score(&self, row: &[f64]) -> (f64, usize) {
        let mut best = (f64::NEG_INFINITY, 0);
        for (j, c) in self.centroids.iter().enumerate() {
            let s = dot(row, c);
            if s > best.0 {
                best = (s, j);
            }
        }
        (best.0.clamp(-1.0, 1.0), best.1)
    }
}

/// Descending score, then ascending id.
fn rank_order(a: &(f64, usize, &str), b: &(f64, usize, &str)) -> Ordering {
    b.0.total_cmp(&a.0).then_with(|| a.2.cmp(b.2))
}

impl CentroidIndex for FlatIndex {
    fn top_k(&self, candidates: &EmbeddingMatrix, top_k: usize) -> Result<Retrieval> {
        if top_k == 0 {
            return Err(Error::Param("top_k must be at least 1".into()));
        }
        if candidates.dim() != self.dim {
            return Err(Error::Domain(format!(
                "candidate dimension {} does not match centroid dimension {}",
                candidates.dim(),
                self.dim
            )));
        }
        let ids = candidates.ids();
        let keep = top_k.min(candidates.len());
        const CHUNK: usize = 4096;
        let partials: Vec<Vec<(f64, usize, &str)>> = (0..candidates.len())
            .collect::<Vec<_>>()
            .par_chunks(CHUNK)
            .map(|chunk| -> Result<Vec<(f64, usize, &str)>> {
                let mut scored = Vec::with_capacity(chunk.len());
                for &i in chunk {
                    let row: Vec<f64> = candidates.row(i).iter().map(|&x| x as f64).collect();
                    let row = unit64(&row).ok_or_else(|| {
                        Error::Domain(format!("embedding of `{}` is the zero vector", ids[i]))
                    })?;
                    let (s, j) = self.score(&row);
                    scored.push((s, j, ids[i].as_str()));
                }
                if scored.len() > keep {
                    scored.select_nth_unstable_by(keep - 1, rank_order);
                    scored.truncate(keep);
                }
                Ok(scored)
            })
            .collect::<Result<_>>()?;
        let mut merged: Vec<_> = partials.into_iter().flatten().collect();
        merged.sort_by(rank_order);
        merged.truncate(keep);
        let ranked = merged
            .into_iter()
            .enumerate()
            .map(|(r, (score, best_centroid, id))| RankedCandidate {
                segment_id: id.to_string(),
                score,
                best_centroid,
                rank: r + 1,
            })
            .collect();
        Ok(Retrieval {
            ranked,
            truncated: top_k > candidates.len(),
        })
    }
}

/// Scores every candidate by its best centroid cosine and returns the
/// `top_k` highest, ties broken by ascending segment id.
pub fn retrieve_topk(candidates: &EmbeddingMatrix, centroids: &CentroidSet, top_k: usize) -> Result<Retrieval> {
    FlatIndex::new(centroids)?.top_k(candidates, top_k)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(centroids: Vec<Vec<f64>>) -> CentroidSet {
        let dim = centroids[0].len();
        CentroidSet {
            k: centroids.len(),
            dim,
            seed: 0,
            centroids,
            ids: vec![],
            assignments: vec![],
            inertia: 0.0,
            iterations: 0,
            inertia_history: vec![],
        }
    }

    #[test]
    fn centroid_copy_ranks_first() {
        let s = set(vec![vec![0.6, 0.8], vec![1.0, 0.0]]);
        let cands = EmbeddingMatrix::from_rows(
            vec!["a".into(), "b".into(), "c".into()],
            vec![vec![0.0, 1.0], vec![3.0, 4.0], vec![-1.0, -1.0]],
        )
        .unwrap();
        let r = retrieve_topk(&cands, &s, 3).unwrap();
        assert_eq!(r.ranked[0].segment_id, "b");
        assert!((r.ranked[0].score - 1.0).abs() < 1e-12);
        assert_eq!(r.ranked[0].best_centroid, 0);
        assert!(r.ranked.windows(2).all(|w| w[0].score >= w[1].score));
        assert_eq!(r.ranked.iter().map(|c| c.rank).collect::<Vec<_>>(), [1, 2, 3]);
        assert!(!r.truncated);
    }

    #[test]
    fn oversized_top_k_returns_all_with_flag() {
        let s = set(vec![vec![1.0, 0.0]]);
        let cands = EmbeddingMatrix::from_rows(vec!["a".into()], vec![vec![1.0, 1.0]]).unwrap();
        let r = retrieve_topk(&cands, &s, 10).unwrap();
        assert_eq!(r.ranked.len(), 1);
        assert!(r.truncated);
    }

    #[test]
    fn ties_break_by_id() {
        let s = set(vec![vec![1.0, 0.0]]);
        let cands = EmbeddingMatrix::from_rows(
            vec!["z".into(), "m".into(), "a".into()],
            vec![vec![1.0, 0.0], vec![2.0, 0.0], vec![0.5, 0.0]],
        )
        .unwrap();
        let r = retrieve_topk(&cands, &s, 2).unwrap();
        let ids: Vec<_> = r.ranked.iter().map(|c| c.segment_id.as_str()).collect();
        assert_eq!(ids, ["a", "m"]);
    }
}
