use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::mqm::{MqmCategory, SegmentEvaluation, Severity};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SummaryConfig {
    /// Segments with DA at or above this count as high quality.
    pub da_threshold: f64,
}

impl Default for SummaryConfig {
    fn default() -> Self {
        SummaryConfig { da_threshold: 75.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemSummary {
    pub system: String,
    pub segments: usize,
    pub mean_da: f64,
    pub mean_mqm: f64,
    pub total_errors: u64,
    pub by_category: BTreeMap<MqmCategory, u64>,
    /// `Category/Subtype` → count.
    pub by_subtype: BTreeMap<String, u64>,
    pub by_severity: BTreeMap<Severity, u64>,
    /// `Category/Subtype` → severity → count.
    pub table: BTreeMap<String, BTreeMap<Severity, u64>>,
    pub high_da_count: usize,
    pub high_da_share: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairAgreement {
    pub system_a: String,
    pub system_b: String,
    /// Segments evaluated for both systems.
    pub shared_segments: usize,
    pub identical_da_share: f64,
    pub identical_mqm_share: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationSummary {
    pub da_threshold: f64,
    pub systems: Vec<SystemSummary>,
    pub pairs: Vec<PairAgreement>,
}

/// Per-system means and error counts, plus identical-score shares for every
/// pair of systems. Systems are listed by name; sums run in input order.
pub fn evaluation_summary(evals: &[SegmentEvaluation], cfg: SummaryConfig) -> Result<EvaluationSummary> {
    if evals.is_empty() {
        return Err(Error::Param("no evaluations to summarize".into()));
    }
    let mut by_system: BTreeMap<&str, Vec<&SegmentEvaluation>> = BTreeMap::new();
    for e in evals {
        by_system.entry(e.system.as_str()).or_default().push(e);
    }
    let systems: Vec<SystemSummary> = by_system
        .iter()
        .map(|(name, evs)| {
            let n = evs.len();
            let mut s = SystemSummary {
                system: name.to_string(),
                segments: n,
                mean_da: evs.iter().map(|e| e.da_score).sum::<f64>() / n as f64,
                mean_mqm: evs.iter().map(|e| e.mqm_weighted).sum::<f64>() / n as f64,
                total_errors: 0,
                by_category: BTreeMap::new(),
                by_subtype: BTreeMap::new(),
                by_severity: BTreeMap::new(),
                table: BTreeMap::new(),
                high_da_count: evs.iter().filter(|e| e.da_score >= cfg.da_threshold).count(),
                high_da_share: 0.0,
            };
            s.high_da_share = s.high_da_count as f64 / n as f64;
            for a in evs.iter().flat_map(|e| &e.annotations) {
                let key = format!("{}/{}", a.category, a.subtype);
                s.total_errors += 1;
                *s.by_category.entry(a.category).or_default() += 1;
                *s.by_subtype.entry(key.clone()).or_default() += 1;
                *s.by_severity.entry(a.severity).or_default() += 1;
                *s.table.entry(key).or_default().entry(a.severity).or_default() += 1;
            }
            s
        })
        .collect();

    let index: Vec<(&str, HashMap<&str, &SegmentEvaluation>)> = by_system
        .iter()
        .map(|(name, evs)| (*name, evs.iter().map(|e| (e.segment_id.as_str(), *e)).collect()))
        .collect();
    let mut pairs = Vec::new();
    for i in 0..index.len() {
        for j in i + 1..index.len() {
            let a = index[i].0;
            let (b, mb) = &index[j];
            let shared: Vec<(&SegmentEvaluation, &SegmentEvaluation)> = by_system[a]
                .iter()
                .filter_map(|e| mb.get(e.segment_id.as_str()).map(|o| (*e, *o)))
                .collect();
            let n = shared.len();
            let share = |f: fn(&SegmentEvaluation) -> f64| {
                if n == 0 {
                    0.0
                } else {
                    shared.iter().filter(|(x, y)| f(x) == f(y)).count() as f64 / n as f64
                }
            };
            pairs.push(PairAgreement {
                system_a: a.to_string(),
                system_b: b.to_string(),
                shared_segments: n,
                identical_da_share: share(|e| e.da_score),
                identical_mqm_share: share(|e| e.mqm_weighted),
            });
        }
    }
    Ok(EvaluationSummary {
        da_threshold: cfg.da_threshold,
        systems,
        pairs,
    })
}

/// Markdown table of error counts by category, subtype and severity, one
/// column group per system.
pub fn error_table_markdown(summary: &EvaluationSummary) -> String {
    let mut rows: Vec<&String> = summary.systems.iter().flat_map(|s| s.table.keys()).collect();
    rows.sort();
    rows.dedup();
    let mut out = String::from("| Category | Type |");
    let mut rule = String::from("|---|---|");
    for s in &summary.systems {
        for sev in Severity::ALL.iter().rev() {
            out.push_str(&format!(" {} {} |", s.system, sev.as_str()));
            rule.push_str("---:|");
        }
        out.push_str(&format!(" {} total |", s.system));
        rule.push_str("---:|");
    }
    out.push('\n');
    out.push_str(&rule);
    out.push('\n');
    let cell = |s: &SystemSummary, key: &str, sev: Severity| s.table.get(key).and_then(|m| m.get(&sev)).copied().unwrap_or(0);
    for key in rows {
        let (cat, sub) = key.split_once('/').unwrap_or((key, ""));
        out.push_str(&format!("| {cat} | {sub} |"));
        for s in &summary.systems {
            for sev in Severity::ALL.iter().rev() {
                out.push_str(&format!(" {} |", cell(s, key, *sev)));
            }
            out.push_str(&format!(" {} |", s.by_subtype.get(key).copied().unwrap_or(0)));
        }
        out.push('\n');
    }
    out.push_str("| Total | |");
    for s in &summary.systems {
        for sev in Severity::ALL.iter().rev() {
            out.push_str(&format!(" {} |", s.by_severity.get(sev).copied().unwrap_or(0)));
        }
        out.push_str(&format!(" {} |", s.total_errors));
    }
    out.push('\n');
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BubblePoint {
    pub mqm: f64,
    pub da: f64,
    pub freq: usize,
}

/// Groups identical (MQM, DA) points, ordered by MQM then DA.
pub fn export_bubble_data(evals: &[SegmentEvaluation]) -> Result<Vec<BubblePoint>> {
    if evals.is_empty() {
        return Err(Error::Param("no evaluations to export".into()));
    }
    // +0.0 folds a negative zero into the same bucket
    let mut counts: BTreeMap<(u64, u64), (f64, f64, usize)> = BTreeMap::new();
    let key = |x: f64| (x + 0.0).to_bits();
    for e in evals {
        let entry = counts
            .entry((key(e.mqm_weighted), key(e.da_score)))
            .or_insert((e.mqm_weighted + 0.0, e.da_score + 0.0, 0));
        entry.2 += 1;
    }
    let mut pts: Vec<BubblePoint> = counts
        .into_values()
        .map(|(mqm, da, freq)| BubblePoint { mqm, da, freq })
        .collect();
    pts.sort_by(|a, b| a.mqm.total_cmp(&b.mqm).then(a.da.total_cmp(&b.da)));
    Ok(pts)
}

pub fn bubble_csv(points: &[BubblePoint]) -> String {
    let mut out = String::from("mqm,da,freq\n");
    for p in points {
        out.push_str(&format!("{},{},{}\n", p.mqm, p.da, p.freq));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mteval::mqm::MqmAnnotation;

    fn ev(id: &str, sys: &str, da: f64, sevs: &[Severity]) -> SegmentEvaluation {
        let anns = sevs
            .iter()
            .map(|&s| MqmAnnotation {
                segment_id: id.into(),
                category: MqmCategory::Accuracy,
                subtype: if s == Severity::Minor { "Undertranslation" } else { "Omission" }.into(),
                severity: s,
                annotator: "a".into(),
                span: None,
            })
            .collect();
        SegmentEvaluation::new(id, sys, da, anns).unwrap()
    }

    #[test]
    fn means_and_counts() {
        let evals = vec![
            ev("1", "sft", 100.0, &[]),
            ev("2", "sft", 90.0, &[Severity::Minor]),
            ev("1", "dpo", 80.0, &[Severity::Minor, Severity::Major]),
            ev("2", "dpo", 90.0, &[Severity::Minor]),
        ];
        let s = evaluation_summary(&evals, SummaryConfig::default()).unwrap();
        let names: Vec<_> = s.systems.iter().map(|x| x.system.as_str()).collect();
        assert_eq!(names, ["dpo", "sft"]);
        let dpo = &s.systems[0];
        assert_eq!(dpo.mean_da, 85.0);
        assert_eq!(dpo.mean_mqm, -3.5);
        assert_eq!(dpo.total_errors, 3);
        assert_eq!(dpo.by_severity[&Severity::Minor], 2);
        assert_eq!(dpo.by_subtype["Accuracy/Omission"], 1);
        assert_eq!(s.systems[1].mean_mqm, -0.5);
        assert_eq!(s.pairs.len(), 1);
        assert_eq!(s.pairs[0].shared_segments, 2);
        assert_eq!(s.pairs[0].identical_da_share, 0.5);
        assert_eq!(s.pairs[0].identical_mqm_share, 0.5);
        let md = error_table_markdown(&s);
        assert!(md.contains("| Accuracy | Undertranslation |"));
        assert!(md.lines().last().unwrap().starts_with("| Total |"));
    }

    #[test]
    fn high_da_share() {
        let evals: Vec<_> = (0..50)
            .map(|i| ev(&i.to_string(), "dpo", if i < 30 { 75.0 + (i % 3) as f64 } else { 74.9 }, &[]))
            .collect();
        let s = evaluation_summary(&evals, SummaryConfig::default()).unwrap();
        assert_eq!(s.systems[0].high_da_count, 30);
        assert_eq!(s.systems[0].high_da_share, 0.6);
        let s70 = evaluation_summary(&evals, SummaryConfig { da_threshold: 70.0 }).unwrap();
        assert_eq!(s70.systems[0].high_da_share, 1.0);
    }

    #[test]
    fn bubbles() {
        let evals = vec![
            ev("1", "d", 90.0, &[Severity::Minor]),
            ev("2", "d", 90.0, &[Severity::Minor]),
            ev("3", "d", 90.0, &[Severity::Minor]),
            ev("4", "d", 100.0, &[]),
            ev("5", "d", 100.0, &[Severity::Trivial]),
        ];
        let pts = export_bubble_data(&evals).unwrap();
        assert_eq!(pts.len(), 2);
        assert_eq!((pts[0].mqm, pts[0].da, pts[0].freq), (-1.0, 90.0, 3));
        assert_eq!(pts[1].freq, 2);
        assert_eq!(pts.iter().map(|p| p.freq).sum::<usize>(), evals.len());
        assert_eq!(bubble_csv(&pts), "mqm,da,freq\n-1,90,3\n0,100,2\n");
        assert!(export_bubble_data(&[]).is_err());
    }
}
