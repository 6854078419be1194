use std::path::{Path, PathBuf};

use super::provider::{EmbedItem, EmbeddingProvider};
use super::{vecfile, EmbedSide, EmbeddingMatrix};
use crate::corpus::Corpus;
use crate::digest::FieldDigest;
use crate::{Error, Result};

/// Directory of vector files named by the digest of what was embedded.
#[derive(Debug, Clone)]
pub struct EmbeddingCache {
    dir: PathBuf,
}

impl EmbeddingCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        EmbeddingCache { dir: dir.into() }
    }

    pub fn path_for(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{key}.vec"))
    }

    pub fn get(&self, key: &str) -> Result<Option<EmbeddingMatrix>> {
        let p = self.path_for(key);
        if !p.exists() {
            return Ok(None);
        }
        vecfile::read_vectors(&p).map(Some)
    }

    pub fn put(&self, key: &str, matrix: &EmbeddingMatrix) -> Result<PathBuf> {
        let p = self.path_for(key);
        vecfile::write_vectors(matrix, &p)?;
        Ok(p)
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }
}

pub fn side_text(seg: &crate::corpus::Segment, side: EmbedSide) -> String {
    match side {
        EmbedSide::Source => seg.source_text.clone(),
        EmbedSide::Target => seg.target_text.clone(),
        EmbedSide::Concat => format!("{}\n{}", seg.source_text, seg.target_text),
    }
}

pub fn embedding_key(fingerprint: &str, side: EmbedSide, items: &[EmbedItem]) -> String {
    let mut d = FieldDigest::new();
    d.str(fingerprint).str(&side.to_string());
    for it in items {
        d.str(&it.id).str(&it.text);
    }
    d.finish()
}

/// Embeds one side of every segment, order-aligned with the corpus.
///
/// With a cache, a repeated call over unchanged content is served from disk.
pub fn embed_segments(
    corpus: &Corpus,
    provider: &dyn EmbeddingProvider,
    side: EmbedSide,
    expected_dim: usize,
    cache: Option<&EmbeddingCache>,
) -> Result<EmbeddingMatrix> {
    if provider.dim() != expected_dim {
        return Err(Error::Config(format!(
            "provider dimension {} does not match configured dimension {expected_dim}",
            provider.dim()
        )));
    }
    let items: Vec<EmbedItem> = corpus
        .segments
        .iter()
        .map(|s| EmbedItem {
            id: s.id.clone(),
            text: side_text(s, side),
        })
        .collect();
    let key = embedding_key(&provider.fingerprint(), side, &items);
    if let Some(cache) = cache {
        if let Some(hit) = cache.get(&key)? {
            let aligned = hit.dim() == expected_dim
                && hit.ids().iter().map(String::as_str).eq(items.iter().map(|i| i.id.as_str()));
            if aligned {
                return Ok(hit);
            }
        }
    }
    let rows = provider.embed(&items)?;
    if rows.len() != items.len() {
        return Err(Error::Provider {
            retriable: true,
            ids: items.iter().skip(rows.len()).map(|i| i.id.clone()).collect(),
            message: format!("provider returned {} vectors for {} items", rows.len(), items.len()),
        });
    }
    if let Some((it, row)) = items.iter().zip(&rows).find(|(_, r)| r.len() != expected_dim) {
        return Err(Error::Config(format!(
            "vector for `{}` has dimension {}, expected {expected_dim}",
            it.id,
            row.len()
        )));
    }
    let matrix = EmbeddingMatrix::new(
        items.into_iter().map(|i| i.id).collect(),
        expected_dim,
        rows.concat(),
    )?;
    if let Some(cache) = cache {
        cache.put(&key, &matrix)?;
    }
    Ok(matrix)
}
