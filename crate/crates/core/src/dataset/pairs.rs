use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::gate::{quality_gate, AdequacyScorer, GateConfig, GateReport};
use super::simplify::{generate_simplification, AuditLog, SimplificationClient, SimplificationRequest};
use crate::corpus::Corpus;
use crate::{Error, Result};

pub const TRANSLATION_PROMPT: &str = "Translate the following Italian text into English.\n\n{text}";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PreferenceConfig {
    pub model_name: String,
    /// Instruction placed before the source text in every pair's prompt.
    pub translation_prompt: String,
    /// Simultaneous client calls.
    pub concurrency: usize,
    pub review_size: usize,
    pub review_strata: usize,
    pub seed: u64,
}

impl Default for PreferenceConfig {
    fn default() -> Self {
        PreferenceConfig {
            model_name: "simplifier".into(),
            translation_prompt: TRANSLATION_PROMPT.into(),
            concurrency: 4,
            review_size: 20,
            review_strata: 4,
            seed: 0xd90,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreferencePair {
    pub id: String,
    pub prompt: String,
    pub chosen: String,
    pub rejected: String,
    pub gate_report: GateReport,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RejectionStage {
    Generation,
    Gate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rejection {
    pub id: String,
    pub stage: RejectionStage,
    pub reasons: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gate_report: Option<GateReport>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PreferenceOutcome {
    /// Ordered by segment id.
    pub pairs: Vec<PreferencePair>,
    pub rejections: Vec<Rejection>,
}

fn render_prompt(template: &str, text: &str) -> Result<String> {
    if !template.contains("{text}") {
        return Err(Error::Config("translation prompt has no `{text}` placeholder".into()));
    }
    Ok(template.replacen("{text}", text, 1))
}

/// Simplifies every translation (target side) and keeps those that pass the
/// gate as `chosen`, with the original translation as `rejected`.
///
/// Client calls run on a pool of `concurrency` threads; a failing item is
/// logged as a rejection and the rest of the batch continues. Gating runs
/// afterwards in segment id order.
pub fn build_preference_pairs(
    translations: &Corpus,
    client: &dyn SimplificationClient,
    gate: &GateConfig,
    scorer: Option<&dyn AdequacyScorer>,
    cfg: &PreferenceConfig,
    audit: Option<&AuditLog>,
) -> Result<PreferenceOutcome> {
    if cfg.concurrency == 0 {
        return Err(Error::Config("concurrency must be at least 1".into()));
    }
    render_prompt(&cfg.translation_prompt, "")?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.concurrency)
        .build()
        .map_err(|e| Error::Config(e.to_string()))?;
    let generated: Vec<Result<String>> = pool.install(|| {
        translations
            .segments
            .par_iter()
            .map(|s| {
                let req = SimplificationRequest::new(s.target_text.clone(), cfg.model_name.clone());
                generate_simplification(&s.id, &req, client, audit)
            })
            .collect()
    });

    let mut items: Vec<_> = translations.segments.iter().zip(generated).collect();
    items.sort_by(|a, b| a.0.id.cmp(&b.0.id));
    let mut out = PreferenceOutcome::default();
    for (seg, result) in items {
        let simplified = match result {
            Ok(s) => s,
            Err(e) => {
                out.rejections.push(Rejection {
                    id: seg.id.clone(),
                    stage: RejectionStage::Generation,
                    reasons: vec![e.to_string()],
                    gate_report: None,
                });
                continue;
            }
        };
        let simplified = simplified.trim().to_string();
        let report = quality_gate(&seg.target_text, &simplified, gate, scorer);
        if !report.passed || simplified == seg.target_text {
            let mut reasons = report.reasons.clone();
            if reasons.is_empty() {
                reasons.push("simplification equals the translation".into());
            }
            out.rejections.push(Rejection {
                id: seg.id.clone(),
                stage: RejectionStage::Gate,
                reasons,
                gate_report: Some(report),
            });
            continue;
        }
        out.pairs.push(PreferencePair {
            id: seg.id.clone(),
            prompt: render_prompt(&cfg.translation_prompt, &seg.source_text)?,
            chosen: simplified,
            rejected: seg.target_text.clone(),
            gate_report: report,
        });
    }
    Ok(out)
}

#[derive(Serialize, Deserialize)]
pub struct DpoRecord {
    pub prompt: String,
    pub chosen: String,
    pub rejected: String,
}

/// `{"prompt","chosen","rejected"}` per line.
pub fn pairs_to_dpo_jsonl(pairs: &[PreferencePair]) -> String {
    let mut out = String::new();
    for p in pairs {
        let rec = DpoRecord {
            prompt: p.prompt.clone(),
            chosen: p.chosen.clone(),
            rejected: p.rejected.clone(),
        };
        out.push_str(&serde_json::to_string(&rec).expect("records serialize"));
        out.push('\n');
    }
    out
}

pub fn parse_dpo_jsonl(origin: &str, text: &str) -> Result<Vec<DpoRecord>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| Error::parse(origin, i + 1, e.to_string())))
        .collect()
}

/// Re-runs the gate over a DPO file and returns the 1-based record numbers
/// that fail it.
pub fn gate_violations(records: &[DpoRecord], gate: &GateConfig, scorer: Option<&dyn AdequacyScorer>) -> Vec<usize> {
    records
        .iter()
        .enumerate()
        .filter(|(_, r)| r.chosen == r.rejected || !quality_gate(&r.rejected, &r.chosen, gate, scorer).passed)
        .map(|(i, _)| i + 1)
        .collect()
}

pub fn rejections_to_jsonl(rejections: &[Rejection]) -> String {
    let mut out = String::new();
    for r in rejections {
        out.push_str(&serde_json::to_string(r).expect("rejections serialize"));
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReviewItem {
    pub id: String,
    /// 1-based, lowest readability gain first.
    pub stratum: usize,
    pub gain: f64,
}

/// Picks up to `size` pairs for human review, spread evenly over `strata`
/// bands of readability gain.
pub fn review_sample(pairs: &[PreferencePair], size: usize, strata: usize, seed: u64) -> Result<Vec<ReviewItem>> {
    if strata == 0 {
        return Err(Error::Param("review strata must be at least 1".into()));
    }
    let mut by_gain: Vec<(f64, &PreferencePair)> = pairs
        .iter()
        .map(|p| (p.gate_report.gain.unwrap_or(0.0), p))
        .collect();
    by_gain.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.id.cmp(&b.1.id)));
    let n = by_gain.len();
    let strata = strata.min(n.max(1));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    let mut start = 0;
    for s in 0..strata {
        let len = n / strata + usize::from(s < n % strata);
        let quota = (size / strata + usize::from(s < size % strata)).min(len);
        let mut picked = sample(&mut rng, len, quota).into_vec();
        picked.sort_unstable();
        for off in picked {
            let (gain, p) = by_gain[start + off];
            out.push(ReviewItem {
                id: p.id.clone(),
                stratum: s + 1,
                gain,
            });
        }
        start += len;
    }
    Ok(out)
}

/// CSV worksheet for the sampled pairs with empty judgement columns.
pub fn review_worksheet_csv(pairs: &[PreferencePair], sample: &[ReviewItem]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let header = ["id", "stratum", "fre_gain", "prompt", "chosen", "rejected", "adequate", "simpler", "notes"];
    w.write_record(header).map_err(|e| Error::Data(e.to_string()))?;
    for item in sample {
        let p = pairs
            .iter()
            .find(|p| p.id == item.id)
            .ok_or_else(|| Error::MissingIds(vec![item.id.clone()]))?;
        w.write_record([
            p.id.as_str(),
            &item.stratum.to_string(),
            &format!("{:.2}", item.gain),
            &p.prompt,
            &p.chosen,
            &p.rejected,
            "",
            "",
            "",
        ])
        .map_err(|e| Error::Data(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Data(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Data(e.to_string()))
}
