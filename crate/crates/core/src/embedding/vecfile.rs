//! Vector file format.
//!
//! Binary layout, all integers little-endian:
//!
//! ```text
//! magic   8 bytes  "CMVECF01"
//! dim     u32
//! count   u64
//! ids     count × (u32 byte length, UTF-8 bytes)
//! rows    count × dim × f32
//! ```
//!
//! A JSONL debug form carries one `{"id": .., "vector": [..]}` object per line.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::EmbeddingMatrix;
use crate::{Error, Result};

pub const MAGIC: &[u8; 8] = b"CMVECF01";

pub fn encode(matrix: &EmbeddingMatrix) -> Vec<u8> {
    let mut out = Vec::with_capacity(20 + matrix.data().len() * 4 + matrix.len() * 16);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(matrix.dim() as u32).to_le_bytes());
    out.extend_from_slice(&(matrix.len() as u64).to_le_bytes());
    for id in matrix.ids() {
        out.extend_from_slice(&(id.len() as u32).to_le_bytes());
        out.extend_from_slice(id.as_bytes());
    }
    for v in matrix.data() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.buf.len())
            .ok_or_else(|| Error::format("vector file", format!("truncated at byte {}", self.pos)))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn remaining(&self) -> usize {
        self.buf.len() - self.pos
    }
}

pub fn decode(bytes: &[u8]) -> Result<EmbeddingMatrix> {
    let mut r = Reader { buf: bytes, pos: 0 };
    if r.take(8)? != MAGIC {
        return Err(Error::format("vector file", "bad magic"));
    }
    let dim = r.u32()? as usize;
    let count = r.u64()?;
    // every id needs at least its 4-byte length prefix
    if count > (r.remaining() / 4) as u64 {
        return Err(Error::format("vector file", format!("count {count} exceeds file size")));
    }
    let count = count as usize;
    let mut ids = Vec::with_capacity(count);
    for _ in 0..count {
        let len = r.u32()? as usize;
        let raw = r.take(len)?;
        let id = std::str::from_utf8(raw)
            .map_err(|_| Error::format("vector file", "id is not valid UTF-8"))?;
        ids.push(id.to_string());
    }
    let expected = count
        .checked_mul(dim)
        .and_then(|n| n.checked_mul(4))
        .ok_or_else(|| Error::format("vector file", "matrix size overflows"))?;
    if r.remaining() != expected {
        return Err(Error::format(
            "vector file",
            format!("expected {expected} bytes of rows, found {}", r.remaining()),
        ));
    }
    let data = r
        .take(expected)?
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    EmbeddingMatrix::new(ids, dim, data)
}

#[derive(Serialize, Deserialize)]
struct JsonRow {
    id: String,
    vector: Vec<f32>,
}

pub fn encode_jsonl(matrix: &EmbeddingMatrix) -> String {
    let mut out = String::new();
    for (id, row) in matrix.ids().iter().zip(matrix.rows()) {
        let rec = JsonRow {
            id: id.clone(),
            vector: row.to_vec(),
        };
        out.push_str(&serde_json::to_string(&rec).expect("vector rows serialize"));
        out.push('\n');
    }
    out
}

pub fn decode_jsonl(text: &str) -> Result<EmbeddingMatrix> {
    let mut ids = Vec::new();
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let rec: JsonRow = serde_json::from_str(line)
            .map_err(|e| Error::parse("vector jsonl", i + 1, e.to_string()))?;
        ids.push(rec.id);
        rows.push(rec.vector);
    }
    EmbeddingMatrix::from_rows(ids, rows)
}

/// Reads either format, sniffing the magic bytes.
pub fn read_vectors(path: &Path) -> Result<EmbeddingMatrix> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.starts_with(MAGIC) {
        decode(&bytes)
    } else {
        let text = std::str::from_utf8(&bytes)
            .map_err(|_| Error::format(&path.display().to_string(), "neither binary vectors nor UTF-8 JSONL"))?;
        decode_jsonl(text)
    }
}

/// Writes the binary format atomically (temp file + rename).
pub fn write_vectors(matrix: &EmbeddingMatrix, path: &Path) -> Result<()> {
    crate::digest::write_artifact(path, &encode(matrix)).map(drop)
}
