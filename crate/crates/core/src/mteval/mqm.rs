use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    /// Also accepted as `neutral`.
    #[serde(alias = "neutral")]
    Trivial,
    Minor,
    Major,
    Critical,
}

impl Severity {
    pub const ALL: [Severity; 4] = [Severity::Trivial, Severity::Minor, Severity::Major, Severity::Critical];

    pub fn weight(self) -> f64 {
        match self {
            Severity::Trivial => 0.0,
            Severity::Minor => 1.0,
            Severity::Major => 5.0,
            Severity::Critical => 25.0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Severity::Trivial => "trivial",
            Severity::Minor => "minor",
            Severity::Major => "major",
            Severity::Critical => "critical",
        }
    }
}

impl FromStr for Severity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "trivial" | "neutral" => Ok(Severity::Trivial),
            "minor" => Ok(Severity::Minor),
            "major" => Ok(Severity::Major),
            "critical" => Ok(Severity::Critical),
            other => Err(Error::Param(format!("unknown severity `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum MqmCategory {
    Accuracy,
    Fluency,
    Style,
    Terminology,
    LinguisticConventions,
    LocaleConventions,
    AudienceAppropriateness,
    Verity,
}

impl MqmCategory {
    pub const ALL: [MqmCategory; 8] = [
        MqmCategory::Accuracy,
        MqmCategory::Fluency,
        MqmCategory::Style,
        MqmCategory::Terminology,
        MqmCategory::LinguisticConventions,
        MqmCategory::LocaleConventions,
        MqmCategory::AudienceAppropriateness,
        MqmCategory::Verity,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            MqmCategory::Accuracy => "Accuracy",
            MqmCategory::Fluency => "Fluency",
            MqmCategory::Style => "Style",
            MqmCategory::Terminology => "Terminology",
            MqmCategory::LinguisticConventions => "LinguisticConventions",
            MqmCategory::LocaleConventions => "LocaleConventions",
            MqmCategory::AudienceAppropriateness => "AudienceAppropriateness",
            MqmCategory::Verity => "Verity",
        }
    }

    /// Accepted subtypes in canonical spelling.
    pub fn subtypes(self) -> &'static [&'static str] {
        match self {
            MqmCategory::Accuracy => &["Addition", "Mistranslation", "Omission", "Overtranslation", "Undertranslation"],
            MqmCategory::AudienceAppropriateness => &["Offensive"],
            MqmCategory::LinguisticConventions => &["Grammar", "Punctuation"],
            MqmCategory::Style => &["AwkwardStyle", "LanguageRegister"],
            MqmCategory::Terminology => &["WrongTerm"],
            MqmCategory::Fluency => &["Spelling", "Inconsistency", "Unintelligible"],
            MqmCategory::LocaleConventions => &["NumberFormat", "DateFormat", "TimeFormat", "CurrencyFormat", "MeasurementFormat", "AddressFormat"],
            MqmCategory::Verity => &["CultureSpecificReference", "Completeness", "LegalRequirements"],
        }
    }

    /// Canonical subtype for a loosely spelled one (`"Awkward style"` →
    /// `"AwkwardStyle"`), or `None` if it does not belong to this category.
    pub fn canonical_subtype(self, subtype: &str) -> Option<&'static str> {
        let key = squash(subtype);
        self.subtypes().iter().copied().find(|s| squash(s) == key)
    }
}

fn squash(s: &str) -> String {
    s.chars()
        .filter(|c| c.is_alphanumeric())
        .flat_map(char::to_lowercase)
        .collect()
}

impl fmt::Display for MqmCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MqmCategory {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = squash(s);
        MqmCategory::ALL
            .into_iter()
            .find(|c| squash(c.as_str()) == key)
            .ok_or_else(|| Error::Param(format!("unknown MQM category `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MqmAnnotation {
    pub segment_id: String,
    pub category: MqmCategory,
    pub subtype: String,
    pub severity: Severity,
    #[serde(default = "default_annotator")]
    pub annotator: String,
    /// Character offsets into the target text, end exclusive.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub span: Option<(usize, usize)>,
}

fn default_annotator() -> String {
    "default".into()
}

impl MqmAnnotation {
    /// Rewrites the subtype to its canonical spelling, rejecting subtypes
    /// outside the category.
    pub fn canonicalize(&mut self) -> Result<()> {
        let canon = self.category.canonical_subtype(&self.subtype).ok_or_else(|| {
            Error::Param(format!(
                "subtype `{}` is not part of {} (expected one of {})",
                self.subtype,
                self.category,
                self.category.subtypes().join(", ")
            ))
        })?;
        self.subtype = canon.to_string();
        if let Some((a, b)) = self.span {
            if a > b {
                return Err(Error::Param(format!("span ({a}, {b}) is reversed")));
            }
        }
        Ok(())
    }
}

/// Negated sum of severity weights; 0 for an error-free segment.
pub fn mqm_segment_score(annotations: &[MqmAnnotation]) -> f64 {
    0.0 - annotations.iter().map(|a| a.severity.weight()).sum::<f64>()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentEvaluation {
    pub segment_id: String,
    pub system: String,
    pub mqm_weighted: f64,
    pub da_score: f64,
    #[serde(default)]
    pub annotations: Vec<MqmAnnotation>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEvaluation {
    segment_id: String,
    system: String,
    #[serde(default)]
    mqm_weighted: Option<f64>,
    da_score: f64,
    #[serde(default)]
    annotations: Vec<MqmAnnotation>,
}

impl SegmentEvaluation {
    /// Validates the annotations and fills in `mqm_weighted`.
    pub fn new(segment_id: impl Into<String>, system: impl Into<String>, da_score: f64, mut annotations: Vec<MqmAnnotation>) -> Result<Self> {
        let segment_id = segment_id.into();
        if !(0.0..=100.0).contains(&da_score) {
            return Err(Error::Param(format!("DA score {da_score} outside [0, 100]")));
        }
        for a in &mut annotations {
            if a.segment_id != segment_id {
                return Err(Error::Param(format!(
                    "annotation for `{}` attached to segment `{segment_id}`",
                    a.segment_id
                )));
            }
            a.canonicalize()?;
        }
        Ok(SegmentEvaluation {
            mqm_weighted: mqm_segment_score(&annotations),
            segment_id,
            system: system.into(),
            da_score,
            annotations,
        })
    }
}

/// One evaluation per line. `mqm_weighted` may be omitted; when present it
/// must equal the recomputed score. Annotations may omit `segment_id`.
pub fn parse_evaluations_jsonl(origin: &str, text: &str) -> Result<Vec<SegmentEvaluation>> {
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let mut value: serde_json::Value =
            serde_json::from_str(line).map_err(|e| Error::parse(origin, line_no, e.to_string()))?;
        // annotations may leave segment_id implicit
        if let (Some(seg), Some(anns)) = (
            value.get("segment_id").cloned(),
            value.get_mut("annotations").and_then(|a| a.as_array_mut()),
        ) {
            for a in anns {
                if let Some(obj) = a.as_object_mut() {
                    obj.entry("segment_id").or_insert(seg.clone());
                }
            }
        }
        let raw: RawEvaluation =
            serde_json::from_value(value).map_err(|e| Error::parse(origin, line_no, e.to_string()))?;
        let ev = SegmentEvaluation::new(raw.segment_id, raw.system, raw.da_score, raw.annotations)
            .map_err(|e| Error::parse(origin, line_no, e.to_string()))?;
        if let Some(given) = raw.mqm_weighted {
            if given != ev.mqm_weighted {
                return Err(Error::parse(
                    origin,
                    line_no,
                    format!("mqm_weighted {given} does not match recomputed {}", ev.mqm_weighted),
                ));
            }
        }
        if !seen.insert((ev.system.clone(), ev.segment_id.clone())) {
            return Err(Error::parse(
                origin,
                line_no,
                format!("duplicate evaluation of `{}` for system `{}`", ev.segment_id, ev.system),
            ));
        }
        out.push(ev);
    }
    Ok(out)
}

pub fn evaluations_to_jsonl(evals: &[SegmentEvaluation]) -> String {
    let mut out = String::new();
    for e in evals {
        out.push_str(&serde_json::to_string(e).expect("evaluations serialize"));
        out.push('\n');
    }
    out
}
