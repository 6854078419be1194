//! Parallel corpus types, file I/O and stage manifests.
//!
//! JSONL is the canonical interchange format, one object per segment:
//! `{"id":..,"src":..,"tgt":..,"corpus":..,"meta":{..}}`. TSV
//! (`src<TAB>tgt[<TAB>id]`) is accepted for OPUS-style inputs. Text is kept
//! exactly as read; normalization is a cleaning step.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::digest::write_artifact;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    pub id: String,
    #[serde(rename = "src")]
    pub source_text: String,
    #[serde(rename = "tgt")]
    pub target_text: String,
    /// Provenance, e.g. `EuroParl`, `Wikimedia` or `Reference`.
    #[serde(rename = "corpus")]
    pub source_corpus: String,
    #[serde(default)]
    pub meta: BTreeMap<String, String>,
}

impl Segment {
    pub fn new(
        id: impl Into<String>,
        source_text: impl Into<String>,
        target_text: impl Into<String>,
        source_corpus: impl Into<String>,
    ) -> Self {
        Segment {
            id: id.into(),
            source_text: source_text.into(),
            target_text: target_text.into(),
            source_corpus: source_corpus.into(),
            meta: BTreeMap::new(),
        }
    }

    pub fn side(&self, side: Side) -> &str {
        match side {
            Side::Source => &self.source_text,
            Side::Target => &self.target_text,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Source,
    Target,
}

impl FromStr for Side {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "source" | "src" => Ok(Side::Source),
            "target" | "tgt" => Ok(Side::Target),
            other => Err(Error::Param(format!("unknown side `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Corpus {
    pub name: String,
    pub segments: Vec<Segment>,
    /// ISO 639-1 codes, source first.
    pub language_pair: (String, String),
}

impl Corpus {
    pub fn new(name: impl Into<String>, segments: Vec<Segment>) -> Self {
        Corpus {
            name: name.into(),
            segments,
            language_pair: ("it".to_string(), "en".to_string()),
        }
    }

    pub fn len(&self) -> usize {
        self.segments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    /// Same name and language pair, different segments.
    pub fn with_segments(&self, segments: Vec<Segment>) -> Corpus {
        Corpus {
            name: self.name.clone(),
            segments,
            language_pair: self.language_pair.clone(),
        }
    }

    /// Keeps the segments for which `keep` returns true, in order.
    pub fn retain_by(&self, mut keep: impl FnMut(&Segment) -> bool) -> Corpus {
        self.with_segments(self.segments.iter().filter(|s| keep(s)).cloned().collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorpusFormat {
    Jsonl,
    Tsv,
}

impl CorpusFormat {
    /// `.tsv`/`.txt` → TSV, anything else JSONL.
    pub fn from_path(path: &Path) -> CorpusFormat {
        match path.extension().and_then(|e| e.to_str()) {
            Some("tsv") | Some("txt") => CorpusFormat::Tsv,
            _ => CorpusFormat::Jsonl,
        }
    }
}

impl FromStr for CorpusFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "jsonl" => Ok(CorpusFormat::Jsonl),
            "tsv" => Ok(CorpusFormat::Tsv),
            other => Err(Error::Param(format!("unknown corpus format `{other}`"))),
        }
    }
}

impl fmt::Display for CorpusFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CorpusFormat::Jsonl => "jsonl",
            CorpusFormat::Tsv => "tsv",
        })
    }
}

/// Record written next to every stage output.
///
/// Maps are ordered so the serialized manifest is byte-stable.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct PipelineManifest {
    pub stage_name: String,
    pub input_count: u64,
    pub output_count: u64,
    #[serde(default)]
    pub parameters: BTreeMap<String, String>,
    pub content_digest: String,
    /// Input artifact (relative path) → digest at the time the stage ran.
    #[serde(default)]
    pub inputs: BTreeMap<String, String>,
    /// Output artifact (relative path) → digest.
    #[serde(default)]
    pub outputs: BTreeMap<String, String>,
    /// Named intermediate counts, e.g. per cleaning filter.
    #[serde(default)]
    pub counts: BTreeMap<String, u64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl PipelineManifest {
    pub fn new(stage_name: impl Into<String>) -> Self {
        PipelineManifest {
            stage_name: stage_name.into(),
            ..Default::default()
        }
    }

    pub fn param(mut self, key: &str, value: impl ToString) -> Self {
        self.parameters.insert(key.to_string(), value.to_string());
        self
    }
}

#[derive(Deserialize)]
struct JsonlRecord {
    id: Option<String>,
    src: Option<String>,
    tgt: Option<String>,
    corpus: Option<String>,
    #[serde(default)]
    meta: BTreeMap<String, String>,
}

fn corpus_name_of(path: &Path) -> String {
    path.file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("corpus")
        .to_string()
}

pub fn read_corpus(path: &Path, format: CorpusFormat) -> Result<Corpus> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let name = corpus_name_of(path);
    match format {
        CorpusFormat::Jsonl => parse_jsonl(&name, &text),
        CorpusFormat::Tsv => parse_tsv(&name, &text),
    }
}

fn check_text(name: &str, line: usize, field: &str, text: &str) -> Result<()> {
    if text.trim().is_empty() {
        return Err(Error::parse(name, line, format!("empty `{field}` text")));
    }
    Ok(())
}

fn check_unique(name: &str, line: usize, seen: &mut HashSet<String>, id: &str) -> Result<()> {
    if !seen.insert(id.to_string()) {
        return Err(Error::parse(name, line, format!("duplicate id `{id}`")));
    }
    Ok(())
}

/// Parses a JSONL corpus. Blank lines are skipped; line numbers are physical.
pub fn parse_jsonl(name: &str, text: &str) -> Result<Corpus> {
    let mut segments = Vec::new();
    let mut seen = HashSet::new();
    for (idx, raw) in text.split('\n').enumerate() {
        let line_no = idx + 1;
        let raw = raw.strip_suffix('\r').unwrap_or(raw);
        if raw.trim().is_empty() {
            continue;
        }
        let rec: JsonlRecord = serde_json::from_str(raw)
            .map_err(|e| Error::parse(name, line_no, format!("invalid JSON object: {e}")))?;
        let src = rec
            .src
            .ok_or_else(|| Error::parse(name, line_no, "missing `src` field"))?;
        let tgt = rec
            .tgt
            .ok_or_else(|| Error::parse(name, line_no, "missing `tgt` field"))?;
        check_text(name, line_no, "src", &src)?;
        check_text(name, line_no, "tgt", &tgt)?;
        let id = rec.id.unwrap_or_else(|| format!("{name}:{line_no}"));
        check_unique(name, line_no, &mut seen, &id)?;
        segments.push(Segment {
            id,
            source_text: src,
            target_text: tgt,
            source_corpus: rec.corpus.unwrap_or_else(|| name.to_string()),
            meta: rec.meta,
        });
    }
    Ok(Corpus::new(name, segments))
}

/// Parses `src<TAB>tgt[<TAB>id]` rows. Every row must have the same number
/// of columns (2 or 3).
pub fn parse_tsv(name: &str, text: &str) -> Result<Corpus> {
    let mut segments = Vec::new();
    let mut seen = HashSet::new();
    let mut width: Option<usize> = None;
    for (idx, raw) in text.split('\n').enumerate() {
        let line_no = idx + 1;
        let raw = raw.strip_suffix('\r').unwrap_or(raw);
        if raw.is_empty() {
            continue;
        }
        let cols: Vec<&str> = raw.split('\t').collect();
        if cols.len() < 2 {
            return Err(Error::parse(
                name,
                line_no,
                "expected at least 2 tab-separated columns",
            ));
        }
        if cols.len() > 3 {
            return Err(Error::parse(
                name,
                line_no,
                format!("expected 2 or 3 columns, found {}", cols.len()),
            ));
        }
        match width {
            None => width = Some(cols.len()),
            Some(w) if w != cols.len() => {
                return Err(Error::format(
                    name,
                    format!(
                        "mixed column counts: line {line_no} has {} columns, earlier rows have {w}",
                        cols.len()
                    ),
                ))
            }
            Some(_) => {}
        }
        check_text(name, line_no, "src", cols[0])?;
        check_text(name, line_no, "tgt", cols[1])?;
        let id = match cols.get(2) {
            Some(id) if !id.is_empty() => id.to_string(),
            Some(_) => return Err(Error::parse(name, line_no, "empty id column")),
            None => format!("{name}:{line_no}"),
        };
        check_unique(name, line_no, &mut seen, &id)?;
        segments.push(Segment::new(id, cols[0], cols[1], name));
    }
    Ok(Corpus::new(name, segments))
}

/// Serializes a corpus without touching the filesystem.
pub fn serialize_corpus(corpus: &Corpus, format: CorpusFormat) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    match format {
        CorpusFormat::Jsonl => {
            for seg in &corpus.segments {
                serde_json::to_writer(&mut out, seg).map_err(|e| Error::Data(e.to_string()))?;
                out.push(b'\n');
            }
        }
        CorpusFormat::Tsv => {
            for seg in &corpus.segments {
                for (field, text) in [
                    ("src", &seg.source_text),
                    ("tgt", &seg.target_text),
                    ("id", &seg.id),
                ] {
                    if text.contains(['\t', '\n', '\r']) {
                        return Err(Error::format(
                            &corpus.name,
                            format!("segment `{}`: {field} contains a tab or newline", seg.id),
                        ));
                    }
                }
                out.extend_from_slice(seg.source_text.as_bytes());
                out.push(b'\t');
                out.extend_from_slice(seg.target_text.as_bytes());
                out.push(b'\t');
                out.extend_from_slice(seg.id.as_bytes());
                out.push(b'\n');
            }
        }
    }
    Ok(out)
}

/// Writes the corpus and returns a manifest whose digest is the SHA-256 of
/// the written bytes.
pub fn write_corpus(corpus: &Corpus, path: &Path, format: CorpusFormat) -> Result<PipelineManifest> {
    if corpus.is_empty() {
        return Err(Error::Param(format!(
            "refusing to write empty corpus `{}`",
            corpus.name
        )));
    }
    let bytes = serialize_corpus(corpus, format)?;
    let digest = write_artifact(path, &bytes)?;
    let n = corpus.len() as u64;
    let mut manifest = PipelineManifest::new("write_corpus").param("format", format);
    manifest.input_count = n;
    manifest.output_count = n;
    manifest.content_digest = digest;
    Ok(manifest)
}
