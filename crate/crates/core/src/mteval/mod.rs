//! Surface metrics and human-evaluation analytics.

mod agreement;
mod bleu;
mod chrf;
mod journal;
mod mqm;
mod summary;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use agreement::{cohens_kappa, AgreementReport};
pub use bleu::{bleu, bleu_tokenize, BleuConfig, BleuScore};
pub use chrf::{chrf, chrf_from_stats, chrf_stats, ChrfConfig, ChrfStats};
pub use journal::{EvaluationJournal, EvaluationSubmission};
pub use mqm::{
    evaluations_to_jsonl, mqm_segment_score, parse_evaluations_jsonl, MqmAnnotation, MqmCategory, SegmentEvaluation,
    Severity,
};
pub use summary::{
    bubble_csv, error_table_markdown, evaluation_summary, export_bubble_data, BubblePoint, EvaluationSummary,
    PairAgreement, SummaryConfig, SystemSummary,
};

use crate::{Error, Result};

/// Corpus-level metric computed elsewhere, e.g. a neural metric behind HTTP.
pub trait ExternalScorer: Send + Sync {
    fn name(&self) -> String;

    fn corpus_score(&self, sources: &[String], hypotheses: &[String], references: &[String]) -> Result<f64>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Bleu,
    Chrf,
    /// Delegated to an [`ExternalScorer`].
    Comet,
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "bleu" => Ok(Metric::Bleu),
            "chrf" => Ok(Metric::Chrf),
            "comet" => Ok(Metric::Comet),
            other => Err(Error::Param(format!("unknown metric `{other}`"))),
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Metric::Bleu => "bleu",
            Metric::Chrf => "chrf",
            Metric::Comet => "comet",
        })
    }
}

/// Scores a system against references with each requested metric.
/// `sources` is only needed by external scorers.
pub fn evaluate_corpus(
    hypotheses: &[String],
    references: &[String],
    sources: Option<&[String]>,
    metrics: &[Metric],
    bleu_cfg: BleuConfig,
    chrf_cfg: ChrfConfig,
    external: Option<&dyn ExternalScorer>,
) -> Result<BTreeMap<Metric, f64>> {
    let mut out = BTreeMap::new();
    for &m in metrics {
        let v = match m {
            Metric::Bleu => bleu(hypotheses, references, bleu_cfg)?.score,
            Metric::Chrf => chrf(hypotheses, references, chrf_cfg)?,
            Metric::Comet => {
                let scorer = external
                    .ok_or_else(|| Error::Config("comet requested but no external scorer is configured".into()))?;
                let src = sources.ok_or_else(|| Error::Param("comet needs source texts".into()))?;
                scorer.corpus_score(src, hypotheses, references)?
            }
        };
        out.insert(m, v);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn comet_without_scorer_is_config_error() {
        let t = vec!["a b".to_string()];
        let r = evaluate_corpus(&t, &t, None, &[Metric::Bleu, Metric::Comet], BleuConfig::default(), ChrfConfig::default(), None);
        assert!(matches!(r, Err(Error::Config(_))));
        let ok = evaluate_corpus(&t, &t, None, &[Metric::Chrf], BleuConfig::default(), ChrfConfig::default(), None).unwrap();
        assert_eq!(ok[&Metric::Chrf], 100.0);
    }
}
