use std::collections::{BTreeMap, HashMap};
use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::digest::sha256_hex;
use crate::{Error, Result};

/// Prompt used to produce A2-level simplifications. `{text}` marks the input.
pub const SIMPLIFICATION_PROMPT: &str = "You are a text simplification AI.
Your task is to simplify the following input to A2 CEFR level. Use only common, everyday words that are appropriate for the context.
Choose words that native speakers would naturally use.
Explain essential terms if those can't be simplified and
maintain the content as in the original.

Input: {text}

Answer just with the simplification
and nothing else. Keep the original tone.";

pub const TEXT_PLACEHOLDER: &str = "{text}";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimplificationRequest {
    pub text: String,
    pub prompt_template: String,
    pub model_name: String,
    #[serde(default)]
    pub params: BTreeMap<String, String>,
}

impl SimplificationRequest {
    pub fn new(text: impl Into<String>, model_name: impl Into<String>) -> Self {
        SimplificationRequest {
            text: text.into(),
            prompt_template: SIMPLIFICATION_PROMPT.to_string(),
            model_name: model_name.into(),
            params: BTreeMap::new(),
        }
    }

    /// Substitutes the first `{text}` of the template. Placeholders inside
    /// the input are left alone.
    pub fn render(&self) -> Result<String> {
        let Some(at) = self.prompt_template.find(TEXT_PLACEHOLDER) else {
            return Err(Error::Config("prompt template has no `{text}` placeholder".into()));
        };
        let mut out = String::with_capacity(self.prompt_template.len() + self.text.len());
        out.push_str(&self.prompt_template[..at]);
        out.push_str(&self.text);
        out.push_str(&self.prompt_template[at + TEXT_PLACEHOLDER.len()..]);
        Ok(out)
    }

    /// Key used by offline tables: SHA-256 of the raw input text.
    pub fn input_digest(&self) -> String {
        sha256_hex(self.text.as_bytes())
    }
}

/// Something that turns a simplification request into text.
pub trait SimplificationClient: Send + Sync {
    fn name(&self) -> String;

    /// `id` identifies the item in errors and audit records.
    fn simplify(&self, id: &str, request: &SimplificationRequest) -> Result<String>;
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OfflineEntry {
    pub input_digest: String,
    pub simplified: String,
}

/// Pre-generated simplifications keyed by input digest.
#[derive(Debug, Clone, Default)]
pub struct OfflineTable {
    entries: HashMap<String, String>,
}

impl OfflineTable {
    pub fn parse(origin: &str, text: &str) -> Result<Self> {
        let mut entries = HashMap::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let e: OfflineEntry =
                serde_json::from_str(line).map_err(|err| Error::parse(origin, i + 1, err.to_string()))?;
            if e.input_digest.len() != 64 || !e.input_digest.bytes().all(|b| b.is_ascii_hexdigit()) {
                return Err(Error::parse(origin, i + 1, "input_digest is not a SHA-256 hex string"));
            }
            if let Some(prev) = entries.insert(e.input_digest.to_ascii_lowercase(), e.simplified.clone()) {
                if prev != e.simplified {
                    return Err(Error::parse(origin, i + 1, "conflicting entries for one input_digest"));
                }
            }
        }
        Ok(OfflineTable { entries })
    }

    pub fn open(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&path.display().to_string(), &text)
    }

    pub fn insert(&mut self, input: &str, simplified: impl Into<String>) {
        self.entries.insert(sha256_hex(input.as_bytes()), simplified.into());
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Entries sorted by digest, one JSON object per line.
    pub fn to_jsonl(&self) -> String {
        let mut keys: Vec<&String> = self.entries.keys().collect();
        keys.sort();
        let mut out = String::new();
        for k in keys {
            let e = OfflineEntry {
                input_digest: k.clone(),
                simplified: self.entries[k].clone(),
            };
            out.push_str(&serde_json::to_string(&e).expect("entries serialize"));
            out.push('\n');
        }
        out
    }
}

impl SimplificationClient for OfflineTable {
    fn name(&self) -> String {
        "offline".into()
    }

    fn simplify(&self, id: &str, request: &SimplificationRequest) -> Result<String> {
        self.entries
            .get(&request.input_digest())
            .cloned()
            .ok_or_else(|| Error::Provider {
                retriable: false,
                ids: vec![id.to_string()],
                message: "no offline simplification for this input".into(),
            })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditRecord {
    pub id: String,
    pub client: String,
    pub model_name: String,
    pub input_digest: String,
    pub prompt: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub response: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Append-only JSONL archive of every request and its outcome.
pub struct AuditLog {
    path: PathBuf,
    file: Mutex<File>,
}

impl AuditLog {
    pub fn create(path: &Path) -> Result<Self> {
        if let Some(dir) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(|e| Error::io(path, e))?;
        Ok(AuditLog {
            path: path.to_path_buf(),
            file: Mutex::new(file),
        })
    }

    pub fn record(&self, rec: &AuditRecord) -> Result<()> {
        let mut line = serde_json::to_vec(rec).map_err(|e| Error::Data(e.to_string()))?;
        line.push(b'\n');
        let mut f = self.file.lock().unwrap_or_else(|p| p.into_inner());
        f.write_all(&line).map_err(|e| Error::io(&self.path, e))
    }

    pub fn path(&self) -> &Path {
        &self.path
    }
}

/// Runs one request through `client`, archiving it when `audit` is given.
pub fn generate_simplification(
    id: &str,
    request: &SimplificationRequest,
    client: &dyn SimplificationClient,
    audit: Option<&AuditLog>,
) -> Result<String> {
    let prompt = request.render()?;
    let result = client.simplify(id, request);
    if let Some(log) = audit {
        log.record(&AuditRecord {
            id: id.to_string(),
            client: client.name(),
            model_name: request.model_name.clone(),
            input_digest: request.input_digest(),
            prompt,
            response: result.as_ref().ok().cloned(),
            error: result.as_ref().err().map(|e| e.to_string()),
        })?;
    }
    result
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn renders_input_line() {
        let p = SimplificationRequest::new("X", "m").render().unwrap();
        assert!(p.starts_with("You are a text simplification AI.\n"));
        assert!(p.contains("\nInput: X\n"));
        assert!(p.ends_with("Answer just with the simplification\nand nothing else. Keep the original tone."));
        assert!(!p.contains(TEXT_PLACEHOLDER));
    }

    #[test]
    fn placeholder_in_input_is_not_expanded() {
        let p = SimplificationRequest::new("say {text}", "m").render().unwrap();
        assert!(p.contains("Input: say {text}\n"));
        assert_eq!(p.matches(TEXT_PLACEHOLDER).count(), 1);
    }

    #[test]
    fn template_without_placeholder_is_config_error() {
        let mut r = SimplificationRequest::new("a", "m");
        r.prompt_template = "no slot".into();
        assert!(matches!(r.render(), Err(Error::Config(_))));
    }

    #[test]
    fn offline_hit_and_miss() {
        let mut t = OfflineTable::default();
        t.insert("Evacuate now.", "Leave now.");
        let t = OfflineTable::parse("t", &t.to_jsonl()).unwrap();
        let hit = SimplificationRequest::new("Evacuate now.", "m");
        assert_eq!(t.simplify("a", &hit).unwrap(), "Leave now.");
        let miss = SimplificationRequest::new("Other.", "m");
        match t.simplify("b", &miss) {
            Err(Error::Provider { ids, retriable: false, .. }) => assert_eq!(ids, ["b"]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn offline_table_rejects_bad_digest() {
        assert!(OfflineTable::parse("t", "{\"input_digest\":\"xyz\",\"simplified\":\"a\"}\n").is_err());
        assert!(OfflineTable::parse("t", "not json\n").is_err());
    }

    #[test]
    fn audit_log_records_success_and_failure() {
        let dir = tempfile::tempdir().unwrap();
        let log = AuditLog::create(&dir.path().join("audit.jsonl")).unwrap();
        let mut t = OfflineTable::default();
        t.insert("A.", "B.");
        generate_simplification("1", &SimplificationRequest::new("A.", "m"), &t, Some(&log)).unwrap();
        assert!(generate_simplification("2", &SimplificationRequest::new("C.", "m"), &t, Some(&log)).is_err());
        let text = std::fs::read_to_string(log.path()).unwrap();
        let recs: Vec<AuditRecord> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
        assert_eq!(recs.len(), 2);
        assert_eq!(recs[0].response.as_deref(), Some("B."));
        assert!(recs[1].error.is_some() && recs[1].response.is_none());
        assert!(recs[0].prompt.contains("Input: A.\n"));
    }

    proptest! {
        #[test]
        fn rendering_is_injective(a in ".{0,30}", b in ".{0,30}") {
            prop_assume!(a != b);
            let ra = SimplificationRequest::new(a, "m").render().unwrap();
            let rb = SimplificationRequest::new(b, "m").render().unwrap();
            prop_assert_ne!(ra, rb);
        }
    }
}
