//! Training data: paragraph-level SFT examples and readability preference
//! pairs.

mod gate;
mod pairs;
mod paragraphs;
mod sft;
mod simplify;

pub use gate::{
    content_overlap, crude_stem, number_tokens, quality_gate, AdequacyScorer, GateConfig, GateMetrics, GateReport,
};
pub use pairs::{
    build_preference_pairs, gate_violations, pairs_to_dpo_jsonl, parse_dpo_jsonl, rejections_to_jsonl,
    review_sample, review_worksheet_csv, DpoRecord, PreferenceConfig, PreferenceOutcome, PreferencePair, Rejection,
    RejectionStage, ReviewItem, TRANSLATION_PROMPT,
};
pub use paragraphs::{build_paragraphs, Granularity, ParagraphConfig, ParagraphExample};
pub use sft::{emit_sft_dataset, parse_sft_jsonl, sft_records, SftMeta, SftRecord, SFT_INSTRUCTION};
pub use simplify::{
    generate_simplification, AuditLog, AuditRecord, OfflineEntry, OfflineTable, SimplificationClient,
    SimplificationRequest, SIMPLIFICATION_PROMPT, TEXT_PLACEHOLDER,
};
