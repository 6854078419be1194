use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::partition::AnnotationBatch;
use crate::{Error, Result};

pub const DEFAULT_ANNOTATOR: &str = "default";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DomainLabelKind {
    InDomain,
    OutOfDomain,
}

impl FromStr for DomainLabelKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "in_domain" => Ok(DomainLabelKind::InDomain),
            "out_of_domain" => Ok(DomainLabelKind::OutOfDomain),
            other => Err(format!("unknown label `{other}` (expected in_domain or out_of_domain)")),
        }
    }
}

impl fmt::Display for DomainLabelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DomainLabelKind::InDomain => "in_domain",
            DomainLabelKind::OutOfDomain => "out_of_domain",
        })
    }
}

/// The eight UNDRR/ISC hazard clusters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HazardCluster {
    MeteorologicalHydrological,
    Extraterrestrial,
    Geological,
    Environmental,
    Chemical,
    Biological,
    Technological,
    Societal,
}

impl HazardCluster {
    pub const ALL: [HazardCluster; 8] = [
        HazardCluster::MeteorologicalHydrological,
        HazardCluster::Extraterrestrial,
        HazardCluster::Geological,
        HazardCluster::Environmental,
        HazardCluster::Chemical,
        HazardCluster::Biological,
        HazardCluster::Technological,
        HazardCluster::Societal,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            HazardCluster::MeteorologicalHydrological => "meteorological_hydrological",
            HazardCluster::Extraterrestrial => "extraterrestrial",
            HazardCluster::Geological => "geological",
            HazardCluster::Environmental => "environmental",
            HazardCluster::Chemical => "chemical",
            HazardCluster::Biological => "biological",
            HazardCluster::Technological => "technological",
            HazardCluster::Societal => "societal",
        }
    }
}

impl FromStr for HazardCluster {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        HazardCluster::ALL
            .into_iter()
            .find(|h| h.as_str() == s)
            .ok_or_else(|| format!("unknown hazard cluster `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DomainLabel {
    pub segment_id: String,
    pub label: DomainLabelKind,
    #[serde(default = "default_annotator")]
    pub annotator: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hazard_tag: Option<HazardCluster>,
    /// RFC 3339; set by the annotation service, optional on import.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<String>,
}

fn default_annotator() -> String {
    DEFAULT_ANNOTATOR.to_string()
}

impl DomainLabel {
    pub fn new(segment_id: impl Into<String>, label: DomainLabelKind, annotator: impl Into<String>) -> Self {
        DomainLabel {
            segment_id: segment_id.into(),
            label,
            annotator: annotator.into(),
            hazard_tag: None,
            timestamp: None,
        }
    }

    /// Checks the label on its own (not against a batch).
    pub fn check(&self) -> std::result::Result<(), String> {
        if self.segment_id.is_empty() {
            return Err("empty segment_id".into());
        }
        if self.annotator.is_empty() {
            return Err(format!("`{}`: empty annotator", self.segment_id));
        }
        if self.hazard_tag.is_some() && self.label != DomainLabelKind::InDomain {
            return Err(format!(
                "`{}`: hazard tag is only allowed on in_domain labels",
                self.segment_id
            ));
        }
        Ok(())
    }
}

const CSV_COLUMNS: [&str; 5] = ["segment_id", "label", "annotator", "hazard_tag", "timestamp"];

/// Parses `segment_id,label[,annotator,hazard_tag,timestamp]` with a header row.
pub fn parse_labels_csv(text: &str) -> Result<Vec<DomainLabel>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = rdr
        .headers()
        .map_err(|e| Error::format("labels csv", e.to_string()))?
        .clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    if let Some(unknown) = headers.iter().find(|h| !CSV_COLUMNS.contains(h)) {
        return Err(Error::format("labels csv", format!("unknown column `{unknown}`")));
    }
    let (Some(id_col), Some(label_col)) = (col("segment_id"), col("label")) else {
        return Err(Error::format("labels csv", "header must contain segment_id and label"));
    };
    let ann_col = col("annotator");
    let hazard_col = col("hazard_tag");
    let ts_col = col("timestamp");
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| Error::parse("labels csv", line, e.to_string()))?;
        let field = |c: Option<usize>| c.and_then(|c| rec.get(c)).filter(|v| !v.is_empty());
        let label = rec
            .get(label_col)
            .unwrap_or("")
            .parse::<DomainLabelKind>()
            .map_err(|e| Error::parse("labels csv", line, e))?;
        let hazard_tag = field(hazard_col)
            .map(str::parse::<HazardCluster>)
            .transpose()
            .map_err(|e| Error::parse("labels csv", line, e))?;
        out.push(DomainLabel {
            segment_id: rec.get(id_col).unwrap_or("").to_string(),
            label,
            annotator: field(ann_col).unwrap_or(DEFAULT_ANNOTATOR).to_string(),
            hazard_tag,
            timestamp: field(ts_col).map(str::to_string),
        });
    }
    Ok(out)
}

pub fn parse_labels_jsonl(text: &str) -> Result<Vec<DomainLabel>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let l: DomainLabel =
            serde_json::from_str(line).map_err(|e| Error::parse("labels jsonl", i + 1, e.to_string()))?;
        out.push(l);
    }
    Ok(out)
}

pub fn labels_to_jsonl(labels: &[DomainLabel]) -> String {
    let mut out = String::new();
    for l in labels {
        out.push_str(&serde_json::to_string(l).expect("labels serialize"));
        out.push('\n');
    }
    out
}

pub fn labels_to_csv(labels: &[DomainLabel]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_COLUMNS).expect("in-memory csv");
    for l in labels {
        w.write_record([
            l.segment_id.as_str(),
            &l.label.to_string(),
            l.annotator.as_str(),
            l.hazard_tag.map(HazardCluster::as_str).unwrap_or(""),
            l.timestamp.as_deref().unwrap_or(""),
        ])
        .expect("in-memory csv");
    }
    String::from_utf8(w.into_inner().expect("in-memory csv")).expect("csv output is UTF-8")
}

/// Validated labels plus the ids labelled by more than one annotator.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelImport {
    pub labels: Vec<DomainLabel>,
    pub needs_adjudication: Vec<String>,
}

/// Rejects labels for ids outside the batch, duplicate `(id, annotator)` rows
/// and hazard tags on out-of-domain labels. All problems are reported together.
pub fn validate_labels(batch: &AnnotationBatch, labels: Vec<DomainLabel>) -> Result<LabelImport> {
    let batch_ids: HashSet<&str> = batch.items.iter().map(|i| i.segment_id.as_str()).collect();
    let mut problems = Vec::new();
    let mut unknown = Vec::new();
    let mut seen = HashSet::new();
    let mut annotators: BTreeMap<&str, HashSet<&str>> = BTreeMap::new();
    for l in &labels {
        if let Err(p) = l.check() {
            problems.push(p);
        }
        if !batch_ids.contains(l.segment_id.as_str()) {
            unknown.push(l.segment_id.clone());
        }
        if !seen.insert((l.segment_id.as_str(), l.annotator.as_str())) {
            problems.push(format!(
                "duplicate label for `{}` by annotator `{}`",
                l.segment_id, l.annotator
            ));
        }
        annotators.entry(&l.segment_id).or_default().insert(&l.annotator);
    }
    if !unknown.is_empty() {
        problems.insert(0, format!("ids not in batch: {}", unknown.join(", ")));
    }
    if !problems.is_empty() {
        return Err(Error::Labels { problems });
    }
    let needs_adjudication = annotators
        .into_iter()
        .filter(|(_, a)| a.len() > 1)
        .map(|(id, _)| id.to_string())
        .collect();
    Ok(LabelImport {
        labels,
        needs_adjudication,
    })
}

/// Reads a `.csv` or JSONL label file and validates it against `batch`.
pub fn import_labels(batch: &AnnotationBatch, labels_file: &Path) -> Result<LabelImport> {
    let text = std::fs::read_to_string(labels_file).map_err(|e| Error::io(labels_file, e))?;
    let labels = match labels_file.extension().and_then(|e| e.to_str()) {
        Some("csv") => parse_labels_csv(&text)?,
        _ => parse_labels_jsonl(&text)?,
    };
    validate_labels(batch, labels)
}

/// One label per id: majority vote, ties resolve to in-domain.
pub fn adjudicate(labels: &[DomainLabel]) -> BTreeMap<String, DomainLabelKind> {
    let mut votes: BTreeMap<&str, (usize, usize)> = BTreeMap::new();
    for l in labels {
        let v = votes.entry(&l.segment_id).or_default();
        match l.label {
            DomainLabelKind::InDomain => v.0 += 1,
            DomainLabelKind::OutOfDomain => v.1 += 1,
        }
    }
    votes
        .into_iter()
        .map(|(id, (n_in, n_out))| {
            let label = if n_out > n_in {
                DomainLabelKind::OutOfDomain
            } else {
                DomainLabelKind::InDomain
            };
            (id.to_string(), label)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::threshold::BatchItem;

    fn batch(ids: &[&str]) -> AnnotationBatch {
        AnnotationBatch {
            items: ids
                .iter()
                .enumerate()
                .map(|(i, id)| BatchItem {
                    segment_id: id.to_string(),
                    partition: 1,
                    rank: i + 1,
                    src: None,
                    tgt: None,
                })
                .collect(),
        }
    }

    #[test]
    fn csv_with_optional_columns() {
        let text = "segment_id,label,annotator,hazard_tag\n\
                    a,in_domain,ann1,geological\n\
                    b,out_of_domain,,\n";
        let labels = parse_labels_csv(text).unwrap();
        assert_eq!(labels.len(), 2);
        assert_eq!(labels[0].hazard_tag, Some(HazardCluster::Geological));
        assert_eq!(labels[1].annotator, DEFAULT_ANNOTATOR);
        let imported = validate_labels(&batch(&["a", "b"]), labels).unwrap();
        assert!(imported.needs_adjudication.is_empty());
    }

    #[test]
    fn unknown_label_string_is_parse_error() {
        let err = parse_labels_csv("segment_id,label\na,maybe\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
    }

    #[test]
    fn id_outside_batch_is_listed() {
        let labels = vec![DomainLabel::new("zzz", DomainLabelKind::InDomain, "x")];
        match validate_labels(&batch(&["a"]), labels).unwrap_err() {
            Error::Labels { problems } => assert!(problems[0].contains("zzz")),
            other => panic!("{other}"),
        }
    }

    #[test]
    fn duplicate_id_annotator_rejected() {
        let labels = vec![
            DomainLabel::new("a", DomainLabelKind::InDomain, "x"),
            DomainLabel::new("a", DomainLabelKind::OutOfDomain, "x"),
        ];
        assert!(validate_labels(&batch(&["a"]), labels).is_err());
    }

    #[test]
    fn hazard_on_out_of_domain_rejected() {
        let mut l = DomainLabel::new("a", DomainLabelKind::OutOfDomain, "x");
        l.hazard_tag = Some(HazardCluster::Chemical);
        assert!(validate_labels(&batch(&["a"]), vec![l]).is_err());
    }

    #[test]
    fn two_annotators_flagged_and_tie_goes_in_domain() {
        let labels = vec![
            DomainLabel::new("a", DomainLabelKind::InDomain, "x"),
            DomainLabel::new("a", DomainLabelKind::OutOfDomain, "y"),
            DomainLabel::new("b", DomainLabelKind::OutOfDomain, "x"),
            DomainLabel::new("b", DomainLabelKind::OutOfDomain, "y"),
            DomainLabel::new("b", DomainLabelKind::InDomain, "z"),
        ];
        let imported = validate_labels(&batch(&["a", "b"]), labels).unwrap();
        assert_eq!(imported.labels.len(), 5);
        assert_eq!(imported.needs_adjudication, ["a", "b"]);
        let adj = adjudicate(&imported.labels);
        assert_eq!(adj["a"], DomainLabelKind::InDomain);
        assert_eq!(adj["b"], DomainLabelKind::OutOfDomain);
    }

    #[test]
    fn csv_and_jsonl_exports_reimport() {
        let mut l = DomainLabel::new("a,b", DomainLabelKind::InDomain, "ann \"q\"");
        l.hazard_tag = Some(HazardCluster::Societal);
        let labels = vec![l, DomainLabel::new("c", DomainLabelKind::OutOfDomain, "x")];
        assert_eq!(parse_labels_csv(&labels_to_csv(&labels)).unwrap(), labels);
        assert_eq!(parse_labels_jsonl(&labels_to_jsonl(&labels)).unwrap(), labels);
    }
}
