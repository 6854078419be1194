use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use super::labels::{parse_labels_jsonl, DomainLabel};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Submission {
    Accepted,
    /// A label for the same `(segment_id, annotator)` already exists.
    Conflict(DomainLabel),
}

/// Append-only JSONL log of submitted labels. Replaying the file on open
/// reproduces the label set exactly.
pub struct LabelJournal {
    path: PathBuf,
    file: File,
    labels: Vec<DomainLabel>,
    index: HashMap<(String, String), usize>,
}

impl LabelJournal {
    pub fn open(path: &Path) -> Result<Self> {
        let labels = match std::fs::read_to_string(path) {
            Ok(text) => parse_labels_jsonl(&text)?,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Vec::new(),
            Err(e) => return Err(Error::io(path, e)),
        };
        let mut index = HashMap::new();
        for (i, l) in labels.iter().enumerate() {
            if index.insert((l.segment_id.clone(), l.annotator.clone()), i).is_some() {
                return Err(Error::Data(format!(
                    "journal {} holds two labels for `{}` by `{}`",
                    path.display(),
                    l.segment_id,
                    l.annotator
                )));
            }
        }
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(|e| Error::io(path, e))?;
        Ok(LabelJournal {
            path: path.to_path_buf(),
            file,
            labels,
            index,
        })
    }

    pub fn labels(&self) -> &[DomainLabel] {
        &self.labels
    }

    pub fn get(&self, segment_id: &str, annotator: &str) -> Option<&DomainLabel> {
        self.index
            .get(&(segment_id.to_string(), annotator.to_string()))
            .map(|&i| &self.labels[i])
    }

    /// Appends and syncs one label unless it conflicts with an existing one.
    pub fn submit(&mut self, label: DomainLabel) -> Result<Submission> {
        let key = (label.segment_id.clone(), label.annotator.clone());
        if let Some(&i) = self.index.get(&key) {
            return Ok(Submission::Conflict(self.labels[i].clone()));
        }
        let mut line = serde_json::to_string(&label).map_err(|e| Error::Data(e.to_string()))?;
        line.push('\n');
        self.file
            .write_all(line.as_bytes())
            .and_then(|_| self.file.sync_data())
            .map_err(|e| Error::io(&self.path, e))?;
        self.index.insert(key, self.labels.len());
        self.labels.push(label);
        Ok(Submission::Accepted)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::threshold::DomainLabelKind;

    #[test]
    fn replay_and_conflict() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("journal.jsonl");
        let mut j = LabelJournal::open(&p).unwrap();
        let a = DomainLabel::new("s1", DomainLabelKind::InDomain, "ann");
        assert_eq!(j.submit(a.clone()).unwrap(), Submission::Accepted);
        let again = DomainLabel::new("s1", DomainLabelKind::OutOfDomain, "ann");
        assert_eq!(j.submit(again).unwrap(), Submission::Conflict(a.clone()));
        j.submit(DomainLabel::new("s1", DomainLabelKind::OutOfDomain, "other")).unwrap();
        drop(j);
        let j = LabelJournal::open(&p).unwrap();
        assert_eq!(j.labels().len(), 2);
        assert_eq!(j.get("s1", "ann"), Some(&a));
    }
}
