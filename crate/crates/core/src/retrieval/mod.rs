//! Reference clustering and max-centroid candidate retrieval.

mod kmeans;
mod topk;

pub use kmeans::{kmeans_cluster, CentroidSet, MAX_ITERATIONS};
pub use topk::{retrieve_topk, CentroidIndex, FlatIndex, RankedCandidate, Retrieval};

use crate::{Error, Result};

/// One [`RankedCandidate`] per line.
pub fn ranked_to_jsonl(ranked: &[RankedCandidate]) -> String {
    let mut out = String::new();
    for r in ranked {
        out.push_str(&serde_json::to_string(r).expect("ranked candidates serialize"));
        out.push('\n');
    }
    out
}

/// Parses `retrieval.jsonl`, checking that ranks run 1..n with non-increasing scores.
pub fn ranked_from_jsonl(text: &str) -> Result<Vec<RankedCandidate>> {
    let mut out: Vec<RankedCandidate> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let r: RankedCandidate =
            serde_json::from_str(line).map_err(|e| Error::parse("retrieval", i + 1, e.to_string()))?;
        if r.rank != out.len() + 1 {
            return Err(Error::parse("retrieval", i + 1, format!("expected rank {}, found {}", out.len() + 1, r.rank)));
        }
        if out.last().is_some_and(|prev| prev.score < r.score) {
            return Err(Error::parse("retrieval", i + 1, "scores must be non-increasing"));
        }
        out.push(r);
    }
    Ok(out)
}
