//! Sentence embeddings: vector types, the on-disk vector format, providers and
//! a content-addressed cache.

mod cache;
mod provider;
pub mod vecfile;

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

pub use cache::{embed_segments, embedding_key, EmbeddingCache};
pub use provider::{EmbedItem, EmbeddingProvider, FileProvider};

use crate::{Error, Result};

/// Default dimension of the multilingual MiniLM sentence encoder.
pub const DEFAULT_DIM: usize = 384;

/// Which text of a segment gets embedded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EmbedSide {
    #[default]
    Source,
    Target,
    /// Source and target joined with a newline.
    Concat,
}

impl std::str::FromStr for EmbedSide {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "source" => Ok(EmbedSide::Source),
            "target" => Ok(EmbedSide::Target),
            "concat" => Ok(EmbedSide::Concat),
            other => Err(Error::Param(format!("unknown embedding side `{other}`"))),
        }
    }
}

impl std::fmt::Display for EmbedSide {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            EmbedSide::Source => "source",
            EmbedSide::Target => "target",
            EmbedSide::Concat => "concat",
        })
    }
}

/// A dense vector with finite entries.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingVector(Vec<f32>);

impl EmbeddingVector {
    pub fn new(values: Vec<f32>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("embedding contains a non-finite value".into()));
        }
        Ok(EmbeddingVector(values))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.0
    }
}

/// `n × dim` row-major matrix of embeddings keyed by segment id.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    ids: Vec<String>,
    dim: usize,
    data: Vec<f32>,
}

impl EmbeddingMatrix {
    pub fn new(ids: Vec<String>, dim: usize, data: Vec<f32>) -> Result<Self> {
        if data.len() != ids.len() * dim {
            return Err(Error::Data(format!(
                "matrix data has {} values, expected {} × {dim}",
                data.len(),
                ids.len()
            )));
        }
        let mut seen = HashSet::with_capacity(ids.len());
        if let Some(dup) = ids.iter().find(|id| !seen.insert(id.as_str())) {
            return Err(Error::Data(format!("duplicate id `{dup}` in embedding matrix")));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("embedding matrix contains a non-finite value".into()));
        }
        Ok(EmbeddingMatrix { ids, dim, data })
    }

    pub fn from_rows(ids: Vec<String>, rows: Vec<Vec<f32>>) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().position(|r| r.len() != dim) {
            return Err(Error::Config(format!(
                "row for `{}` has dimension {}, expected {dim}",
                ids.get(bad).map(String::as_str).unwrap_or("?"),
                rows[bad].len()
            )));
        }
        Self::new(ids, dim, rows.concat())
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f32]> {
        self.data.chunks(self.dim.max(1)).take(self.ids.len())
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    /// Rows converted to `f64` and scaled to unit length.
    pub fn normalized_rows(&self) -> Result<Vec<Vec<f64>>> {
        self.rows()
            .zip(&self.ids)
            .map(|(r, id)| {
                unit(r).ok_or_else(|| Error::Domain(format!("embedding of `{id}` is the zero vector")))
            })
            .collect()
    }
}

pub(crate) fn unit(row: &[f32]) -> Option<Vec<f64>> {
    let v: Vec<f64> = row.iter().map(|&x| x as f64).collect();
    unit64(&v)
}

pub(crate) fn unit64(v: &[f64]) -> Option<Vec<f64>> {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm == 0.0 || !norm.is_finite() {
        return None;
    }
    Some(v.iter().map(|x| x / norm).collect())
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `dot(a, b) / (‖a‖‖b‖)`, clamped to [-1, 1].
pub fn cosine_similarity(a: &[f32], b: &[f32]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Domain(format!(
            "dimension mismatch: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    let mut ab = 0.0f64;
    let mut aa = 0.0f64;
    let mut bb = 0.0f64;
    for (&x, &y) in a.iter().zip(b) {
        let (x, y) = (x as f64, y as f64);
        ab += x * y;
        aa += x * x;
        bb += y * y;
    }
    if aa == 0.0 || bb == 0.0 {
        return Err(Error::Domain("cosine similarity of a zero vector".into()));
    }
    Ok((ab / (aa.sqrt() * bb.sqrt())).clamp(-1.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn cosine_examples() {
        let v = [0.3f32, -1.2, 4.0];
        assert!((cosine_similarity(&v, &v).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(cosine_similarity(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
        // 32 / (sqrt(14) * sqrt(77))
        let expected = 32.0 / (14f64.sqrt() * 77f64.sqrt());
        let got = cosine_similarity(&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0]).unwrap();
        assert!((got - expected).abs() < 1e-12);
        assert!((got - 0.974631846).abs() < 1e-9);
    }

    #[test]
    fn zero_vector_is_domain_error() {
        assert!(matches!(
            cosine_similarity(&[0.0, 0.0], &[1.0, 0.0]),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn matrix_rejects_duplicate_ids() {
        let r = EmbeddingMatrix::from_rows(vec!["a".into(), "a".into()], vec![vec![1.0], vec![2.0]]);
        assert!(r.is_err());
    }

    #[test]
    fn vector_rejects_nan() {
        assert!(EmbeddingVector::new(vec![1.0, f32::NAN]).is_err());
    }

    fn vec3() -> impl Strategy<Value = Vec<f32>> {
        prop::collection::vec(-10.0f32..10.0, 3).prop_filter("non-zero", |v| v.iter().any(|x| x.abs() > 1e-3))
    }

    proptest! {
        #[test]
        fn symmetric_and_scale_invariant(a in vec3(), b in vec3(), alpha in 0.01f32..100.0) {
            let ab = cosine_similarity(&a, &b).unwrap();
            prop_assert!((ab - cosine_similarity(&b, &a).unwrap()).abs() < 1e-12);
            let scaled: Vec<f32> = a.iter().map(|x| x * alpha).collect();
            // f32 scaling rounds each entry, so compare against the f32-scaled input
            prop_assert!((cosine_similarity(&scaled, &b).unwrap() - ab).abs() < 1e-6);
            let scaled64: Vec<f64> = a.iter().map(|&x| x as f64 * alpha as f64).collect();
            let b64: Vec<f64> = b.iter().map(|&x| x as f64).collect();
            let exact = dot(&unit64(&scaled64).unwrap(), &unit64(&b64).unwrap());
            prop_assert!((exact - ab).abs() < 1e-9);
        }
    }
}
