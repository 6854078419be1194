use std::collections::HashMap;
use std::path::Path;

use super::{vecfile, EmbeddingMatrix};
use crate::digest::sha256_hex;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmbedItem {
    pub id: String,
    pub text: String,
}

/// Source of sentence embeddings.
pub trait EmbeddingProvider: Send + Sync {
    /// Identifies the model and its configuration; part of the cache key.
    fn fingerprint(&self) -> String;

    fn dim(&self) -> usize;

    /// One vector per item, in item order.
    fn embed(&self, items: &[EmbedItem]) -> Result<Vec<Vec<f32>>>;
}

/// Serves precomputed vectors looked up by segment id.
pub struct FileProvider {
    matrix: EmbeddingMatrix,
    index: HashMap<String, usize>,
    fingerprint: String,
}

impl FileProvider {
    pub fn open(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        let matrix = vecfile::read_vectors(path)?;
        Ok(Self::with_fingerprint(matrix, format!("file:{}", sha256_hex(&bytes))))
    }

    pub fn from_matrix(matrix: EmbeddingMatrix) -> Self {
        let fp = format!("matrix:{}", sha256_hex(&vecfile::encode(&matrix)));
        Self::with_fingerprint(matrix, fp)
    }

    fn with_fingerprint(matrix: EmbeddingMatrix, fingerprint: String) -> Self {
        let index = matrix
            .ids()
            .iter()
            .enumerate()
            .map(|(i, id)| (id.clone(), i))
            .collect();
        FileProvider {
            matrix,
            index,
            fingerprint,
        }
    }
}

impl EmbeddingProvider for FileProvider {
    fn fingerprint(&self) -> String {
        self.fingerprint.clone()
    }

    fn dim(&self) -> usize {
        self.matrix.dim()
    }

    fn embed(&self, items: &[EmbedItem]) -> Result<Vec<Vec<f32>>> {
        let missing: Vec<String> = items
            .iter()
            .filter(|it| !self.index.contains_key(&it.id))
            .map(|it| it.id.clone())
            .collect();
        if !missing.is_empty() {
            return Err(Error::MissingIds(missing));
        }
        Ok(items
            .iter()
            .map(|it| self.matrix.row(self.index[&it.id]).to_vec())
            .collect())
    }
}
