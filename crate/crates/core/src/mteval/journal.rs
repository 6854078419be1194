use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use super::mqm::{parse_evaluations_jsonl, SegmentEvaluation};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum EvaluationSubmission {
    Accepted,
    /// `(system, segment_id)` was already evaluated.
    Conflict(SegmentEvaluation),
}

/// Append-only JSONL log of segment evaluations, keyed by `(system, segment_id)`.
pub struct EvaluationJournal {
    path: PathBuf,
    file: File,
    evals: Vec<SegmentEvaluation>,
    index: HashMap<(String, String), usize>,
}

impl EvaluationJournal {
    pub fn open(path: &Path) -> Result<Self> {
        let origin = path.display().to_string();
        let evals = match std::fs::read_to_string(path) {
            Ok(text) => parse_evaluations_jsonl(&origin, &text)?,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Vec::new(),
            Err(e) => return Err(Error::io(path, e)),
        };
        let index = evals
            .iter()
            .enumerate()
            .map(|(i, e)| ((e.system.clone(), e.segment_id.clone()), i))
            .collect();
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(|e| Error::io(path, e))?;
        Ok(EvaluationJournal {
            path: path.to_path_buf(),
            file,
            evals,
            index,
        })
    }

    pub fn evaluations(&self) -> &[SegmentEvaluation] {
        &self.evals
    }

    pub fn get(&self, system: &str, segment_id: &str) -> Option<&SegmentEvaluation> {
        self.index
            .get(&(system.to_string(), segment_id.to_string()))
            .map(|&i| &self.evals[i])
    }

    pub fn submit(&mut self, eval: SegmentEvaluation) -> Result<EvaluationSubmission> {
        let key = (eval.system.clone(), eval.segment_id.clone());
        if let Some(&i) = self.index.get(&key) {
            return Ok(EvaluationSubmission::Conflict(self.evals[i].clone()));
        }
        let mut line = serde_json::to_string(&eval).map_err(|e| Error::Data(e.to_string()))?;
        line.push('\n');
        self.file
            .write_all(line.as_bytes())
            .and_then(|_| self.file.sync_data())
            .map_err(|e| Error::io(&self.path, e))?;
        self.index.insert(key, self.evals.len());
        self.evals.push(eval);
        Ok(EvaluationSubmission::Accepted)
    }
}
