//! Standalone commands that work on plain files, outside a pipeline run.

use std::path::Path;

use serde_json::json;

use crate::error::{CliError, CliResult};
use crisismine_core::corpus::{read_corpus, CorpusFormat, Side};
use crisismine_core::mteval::{
    bubble_csv, error_table_markdown, evaluate_corpus, evaluation_summary, export_bubble_data, parse_evaluations_jsonl,
    BleuConfig, ChrfConfig, Metric, SummaryConfig,
};
use crisismine_core::readability::{corpus_readability, segment_reports};
use crisismine_core::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Csv,
    Markdown,
}

impl std::str::FromStr for ReportFormat {
    type Err = CliError;

    fn from_str(s: &str) -> CliResult<Self> {
        match s {
            "json" => Ok(ReportFormat::Json),
            "csv" => Ok(ReportFormat::Csv),
            "md" | "markdown" => Ok(ReportFormat::Markdown),
            other => Err(CliError::Config(format!("unknown report format `{other}`"))),
        }
    }
}

fn read_text(path: &Path) -> CliResult<String> {
    Ok(std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
}

fn read_lines(path: &Path) -> CliResult<Vec<String>> {
    Ok(read_text(path)?.lines().map(str::to_string).collect())
}

/// Readability of one side of a corpus: a corpus summary as JSON, or one
/// CSV row per segment.
pub fn readability(input: &Path, side: Side, format: ReportFormat) -> CliResult<String> {
    let corpus = read_corpus(input, CorpusFormat::from_path(input))?;
    match format {
        ReportFormat::Json => {
            let r = corpus_readability(&corpus, side)?;
            Ok(serde_json::to_string_pretty(&r).map_err(|e| Error::Data(e.to_string()))? + "\n")
        }
        ReportFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record([
                "segment_id", "fre", "fkgl", "smog", "coleman_liau", "ari", "dale_chall", "sentences", "words",
                "syllables",
            ])
            .map_err(|e| Error::Data(e.to_string()))?;
            for (seg, r) in corpus.segments.iter().zip(segment_reports(&corpus, side)) {
                let row: Vec<String> = match r {
                    Some(r) => vec![
                        seg.id.clone(),
                        format!("{:.4}", r.fre),
                        format!("{:.4}", r.fkgl),
                        format!("{:.4}", r.smog),
                        format!("{:.4}", r.coleman_liau),
                        format!("{:.4}", r.ari),
                        format!("{:.4}", r.dale_chall),
                        r.stats.sentences.to_string(),
                        r.stats.words.to_string(),
                        r.stats.syllables.to_string(),
                    ],
                    None => {
                        let mut row = vec![seg.id.clone()];
                        row.extend(std::iter::repeat_n(String::new(), 9));
                        row
                    }
                };
                w.write_record(&row).map_err(|e| Error::Data(e.to_string()))?;
            }
            let bytes = w.into_inner().map_err(|e| Error::Data(e.to_string()))?;
            Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
        }
        ReportFormat::Markdown => Err(CliError::Config("readability reports are json or csv".into())),
    }
}

/// Corpus-level BLEU/chrF (and COMET when a scorer is given) as JSON.
pub fn evaluate(
    hyp: &Path,
    reference: &Path,
    metrics: &[Metric],
    bleu: BleuConfig,
    chrf: ChrfConfig,
) -> CliResult<String> {
    let hyps = read_lines(hyp)?;
    let refs = read_lines(reference)?;
    let scores = evaluate_corpus(&hyps, &refs, None, metrics, bleu, chrf, None)?;
    let v = json!({ "segments": hyps.len(), "scores": scores });
    Ok(serde_json::to_string_pretty(&v).map_err(|e| Error::Data(e.to_string()))? + "\n")
}

/// MQM/DA summary of an evaluation JSONL file: JSON summary, bubble-chart CSV
/// or the per-category error table.
pub fn score_mqm(annotations: &Path, format: ReportFormat, da_threshold: f64) -> CliResult<String> {
    let text = read_text(annotations)?;
    let evals = parse_evaluations_jsonl(&annotations.display().to_string(), &text)?;
    match format {
        ReportFormat::Json => {
            let s = evaluation_summary(&evals, SummaryConfig { da_threshold })?;
            Ok(serde_json::to_string_pretty(&s).map_err(|e| Error::Data(e.to_string()))? + "\n")
        }
        ReportFormat::Csv => Ok(bubble_csv(&export_bubble_data(&evals)?)),
        ReportFormat::Markdown => Ok(error_table_markdown(&evaluation_summary(&evals, SummaryConfig { da_threshold })?)),
    }
}
