use std::path::Path;

use serde::{Deserialize, Serialize};

use super::paragraphs::{Granularity, ParagraphExample};
use crate::corpus::PipelineManifest;
use crate::digest::write_artifact;
use crate::{Error, Result};

pub const SFT_INSTRUCTION: &str = "Translate the following Italian text into English.\n\n{text}";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SftMeta {
    pub id: String,
    pub granularity: Granularity,
    pub member_ids: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SftRecord {
    pub prompt: String,
    pub response: String,
    pub meta: SftMeta,
}

pub fn sft_records(examples: &[ParagraphExample], instruction: &str) -> Result<Vec<SftRecord>> {
    if !instruction.contains("{text}") {
        return Err(Error::Config("SFT instruction has no `{text}` placeholder".into()));
    }
    Ok(examples
        .iter()
        .map(|ex| SftRecord {
            prompt: instruction.replacen("{text}", &ex.source_paragraph, 1),
            response: ex.target_paragraph.clone(),
            meta: SftMeta {
                id: ex.id.clone(),
                granularity: ex.granularity,
                member_ids: ex.member_ids.clone(),
            },
        })
        .collect())
}

/// Writes instruction-style JSONL in example order.
pub fn emit_sft_dataset(examples: &[ParagraphExample], path: &Path, instruction: &str) -> Result<PipelineManifest> {
    if examples.is_empty() {
        return Err(Error::Param("no examples to write".into()));
    }
    let mut bytes = Vec::new();
    for rec in sft_records(examples, instruction)? {
        serde_json::to_writer(&mut bytes, &rec).map_err(|e| Error::Data(e.to_string()))?;
        bytes.push(b'\n');
    }
    let digest = write_artifact(path, &bytes)?;
    let paragraphs = examples.iter().filter(|e| e.granularity == Granularity::Paragraph).count() as u64;
    let mut m = PipelineManifest::new("sft");
    m.input_count = examples.iter().map(|e| e.member_ids.len() as u64).sum();
    m.output_count = examples.len() as u64;
    m.content_digest = digest;
    m.counts.insert("paragraph_examples".into(), paragraphs);
    m.counts.insert("sentence_examples".into(), examples.len() as u64 - paragraphs);
    Ok(m)
}

pub fn parse_sft_jsonl(origin: &str, text: &str) -> Result<Vec<SftRecord>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| Error::parse(origin, i + 1, e.to_string())))
        .collect()
}
