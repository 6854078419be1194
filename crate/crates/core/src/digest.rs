//! Content digests used by manifests, caches and offline lookup tables.

use std::path::Path;

use sha2::{Digest, Sha256};

use crate::{Error, Result};

/// Lowercase hex SHA-256 of `bytes`.
pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Incremental digest over a sequence of length-prefixed fields, so that
/// `["ab", "c"]` and `["a", "bc"]` never collide.
#[derive(Default)]
pub struct FieldDigest {
    inner: Sha256,
}

impl FieldDigest {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn field(&mut self, bytes: &[u8]) -> &mut Self {
        self.inner.update((bytes.len() as u64).to_le_bytes());
        self.inner.update(bytes);
        self
    }

    pub fn str(&mut self, s: &str) -> &mut Self {
        self.field(s.as_bytes())
    }

    pub fn finish(self) -> String {
        hex::encode(self.inner.finalize())
    }
}

/// Writes `bytes` through a temporary file in the target directory and
/// returns their digest. Parent directories are created.
pub fn write_artifact(path: &Path, bytes: &[u8]) -> Result<String> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    std::io::Write::write_all(&mut tmp, bytes).map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(sha256_hex(bytes))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_sha256() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn field_boundaries_matter() {
        let mut a = FieldDigest::new();
        a.str("ab").str("c");
        let mut b = FieldDigest::new();
        b.str("a").str("bc");
        assert_ne!(a.finish(), b.finish());
    }
}
