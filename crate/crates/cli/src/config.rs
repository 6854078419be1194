//! Declarative pipeline configuration (TOML). Unknown keys are rejected and
//! relative paths resolve against the directory of the config file.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};
use crisismine_core::cleaning::CleaningConfig;
use crisismine_core::dataset::{GateConfig, ParagraphConfig, PreferenceConfig, SFT_INSTRUCTION};
use crisismine_core::embedding::{EmbedSide, DEFAULT_DIM};
use crisismine_core::mteval::Metric;
use crisismine_net::HttpEndpoint;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
    /// Worker threads for parallel stages; all cores when unset.
    #[serde(default)]
    pub jobs: Option<usize>,
    pub inputs: Inputs,
    #[serde(default)]
    pub cleaning: CleaningSection,
    #[serde(default)]
    pub embedding: EmbeddingSection,
    #[serde(default)]
    pub retrieval: RetrievalSection,
    #[serde(default)]
    pub threshold: ThresholdSection,
    #[serde(default)]
    pub annotation: AnnotationSection,
    #[serde(default)]
    pub dataset: DatasetSection,
    #[serde(default)]
    pub evaluation: EvaluationSection,
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Inputs {
    /// Small in-domain corpus whose clusters drive retrieval.
    pub reference: PathBuf,
    /// Large general-domain candidate pool.
    pub general: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Filter {
    ExactDedup,
    NearDedup,
    Length,
    Wellformedness,
    Language,
}

impl Filter {
    pub fn as_str(self) -> &'static str {
        match self {
            Filter::ExactDedup => "exact_dedup",
            Filter::NearDedup => "near_dedup",
            Filter::Length => "length",
            Filter::Wellformedness => "wellformedness",
            Filter::Language => "language",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CleaningSection {
    pub params: CleaningConfig,
    /// Applied in the listed order.
    pub reference_filters: Vec<Filter>,
    pub general_filters: Vec<Filter>,
}

impl Default for CleaningSection {
    fn default() -> Self {
        CleaningSection {
            params: CleaningConfig::default(),
            reference_filters: vec![Filter::ExactDedup, Filter::NearDedup],
            general_filters: vec![
                Filter::ExactDedup,
                Filter::NearDedup,
                Filter::Length,
                Filter::Wellformedness,
                Filter::Language,
            ],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProviderKind {
    File,
    Http,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmbeddingSection {
    pub provider: ProviderKind,
    /// Vector file (binary or `.jsonl`) for the file provider, holding rows
    /// for reference and general ids.
    pub vectors: Option<PathBuf>,
    pub dim: usize,
    pub side: EmbedSide,
    /// Defaults to `<out_dir>/cache/embeddings`.
    pub cache_dir: Option<PathBuf>,
    pub http: Option<HttpEmbedding>,
}

impl Default for EmbeddingSection {
    fn default() -> Self {
        EmbeddingSection {
            provider: ProviderKind::File,
            vectors: None,
            dim: DEFAULT_DIM,
            side: EmbedSide::Source,
            cache_dir: None,
            http: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HttpEmbedding {
    pub endpoint: HttpEndpoint,
    #[serde(default = "default_embed_model")]
    pub model: String,
    #[serde(default = "default_embed_path")]
    pub path: String,
    #[serde(default = "default_batch")]
    pub batch_size: usize,
    #[serde(default = "default_concurrency")]
    pub concurrency: usize,
}

fn default_embed_model() -> String {
    "paraphrase-multilingual-MiniLM-L12-v2".into()
}
fn default_embed_path() -> String {
    "/embed".into()
}
fn default_batch() -> usize {
    64
}
fn default_concurrency() -> usize {
    4
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RetrievalSection {
    pub k: usize,
    pub top_k: usize,
    pub seed: u64,
}

impl Default for RetrievalSection {
    fn default() -> Self {
        RetrievalSection {
            k: 5,
            top_k: 50_000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ThresholdSection {
    pub num_partitions: usize,
    pub per_partition: usize,
    pub seed: u64,
    /// Replaces the partition-boundary cutoff with an explicit rank bound.
    pub retain_top: Option<usize>,
}

impl Default for ThresholdSection {
    fn default() -> Self {
        ThresholdSection {
            num_partitions: 6,
            per_partition: 50,
            seed: 0,
            retain_top: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnnotationSection {
    pub bind: String,
    /// Label journal; defaults to `<out_dir>/annotation/labels.jsonl`.
    pub journal: Option<PathBuf>,
    /// Static files of the annotation UI.
    pub ui_dir: Option<PathBuf>,
    /// JSONL of `{segment_id, system, src, hyp}` to evaluate with MQM/DA.
    pub mqm_items: Option<PathBuf>,
    /// Defaults to `<out_dir>/annotation/mqm.jsonl`.
    pub mqm_journal: Option<PathBuf>,
    /// Label file for `import_labels`; the journal is used when unset.
    pub labels: Option<PathBuf>,
    /// Drop labels for ids outside the batch instead of rejecting the file.
    pub labels_allow_extra: bool,
}

impl Default for AnnotationSection {
    fn default() -> Self {
        AnnotationSection {
            bind: "127.0.0.1:8080".into(),
            journal: None,
            ui_dir: None,
            mqm_items: None,
            mqm_journal: None,
            labels: None,
            labels_allow_extra: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DpoSource {
    /// Cleaned reference corpus.
    Reference,
    /// Segments retained by the threshold stage.
    Retained,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetSection {
    pub paragraphs: ParagraphConfig,
    pub sft_instruction: String,
    pub dpo_source: DpoSource,
    pub gate: GateConfig,
    pub preference: PreferenceConfig,
    pub simplifier: Option<SimplifierSection>,
    /// Semantic adequacy service; the content-overlap proxy is used when unset.
    pub adequacy: Option<HttpEndpoint>,
}

impl Default for DatasetSection {
    fn default() -> Self {
        DatasetSection {
            paragraphs: ParagraphConfig::default(),
            sft_instruction: SFT_INSTRUCTION.to_string(),
            dpo_source: DpoSource::Reference,
            gate: GateConfig::default(),
            preference: PreferenceConfig::default(),
            simplifier: None,
            adequacy: None,
        }
    }
}

/// Exactly one of `offline_table` and `chat` must be set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimplifierSection {
    #[serde(default)]
    pub offline_table: Option<PathBuf>,
    #[serde(default)]
    pub chat: Option<ChatSection>,
    /// Overrides the built-in simplification prompt; must contain `{text}`.
    #[serde(default)]
    pub prompt_template: Option<String>,
    #[serde(default)]
    pub params: std::collections::BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChatSection {
    pub endpoint: HttpEndpoint,
    #[serde(default = "default_chat_path")]
    pub path: String,
}

fn default_chat_path() -> String {
    "/v1/chat/completions".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluationSection {
    /// One segment per line; aligned with `references`.
    pub hypotheses: Option<PathBuf>,
    pub references: Option<PathBuf>,
    /// Needed only by external scorers.
    pub sources: Option<PathBuf>,
    pub metrics: Vec<Metric>,
    pub bleu_max_n: usize,
    pub bleu_smooth: bool,
    pub chrf_char_n: usize,
    pub chrf_beta: f64,
    pub comet: Option<HttpEndpoint>,
    /// Segment evaluations (JSONL); falls back to the MQM journal.
    pub mqm_annotations: Option<PathBuf>,
    pub da_threshold: f64,
}

impl Default for EvaluationSection {
    fn default() -> Self {
        EvaluationSection {
            hypotheses: None,
            references: None,
            sources: None,
            metrics: vec![Metric::Bleu, Metric::Chrf],
            bleu_max_n: 4,
            bleu_smooth: false,
            chrf_char_n: 6,
            chrf_beta: 2.0,
            comet: None,
            mqm_annotations: None,
            da_threshold: 75.0,
        }
    }
}

impl PipelineConfig {
    /// Parses TOML; errors name the offending key path.
    pub fn parse(text: &str) -> CliResult<Self> {
        let de = toml::Deserializer::new(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            let msg = inner.message().to_string();
            let at = inner
                .span()
                .map(|s| {
                    let line = text[..s.start].matches('\n').count() + 1;
                    format!(" (line {line})")
                })
                .unwrap_or_default();
            if path.is_empty() || path == "." {
                CliError::Config(format!("{msg}{at}"))
            } else {
                CliError::Config(format!("{path}: {msg}{at}"))
            }
        })
    }

    /// Reads and parses `path`, resolving relative paths against its directory.
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::parse(&text)?;
        let base = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
        cfg.resolve_paths(base);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        let fix_opt = |p: &mut Option<PathBuf>| {
            if let Some(p) = p {
                if p.is_relative() {
                    *p = base.join(&*p);
                }
            }
        };
        fix(&mut self.out_dir);
        fix(&mut self.inputs.reference);
        fix(&mut self.inputs.general);
        fix_opt(&mut self.embedding.vectors);
        fix_opt(&mut self.embedding.cache_dir);
        fix_opt(&mut self.annotation.journal);
        fix_opt(&mut self.annotation.ui_dir);
        fix_opt(&mut self.annotation.mqm_items);
        fix_opt(&mut self.annotation.mqm_journal);
        fix_opt(&mut self.annotation.labels);
        if let Some(s) = &mut self.dataset.simplifier {
            fix_opt(&mut s.offline_table);
        }
        fix_opt(&mut self.evaluation.hypotheses);
        fix_opt(&mut self.evaluation.references);
        fix_opt(&mut self.evaluation.sources);
        fix_opt(&mut self.evaluation.mqm_annotations);
    }

    /// Cross-field checks that serde cannot express.
    pub fn validate(&self) -> CliResult<()> {
        let bad = |m: String| Err(CliError::Config(m));
        match self.embedding.provider {
            ProviderKind::File if self.embedding.vectors.is_none() => {
                return bad("embedding.vectors is required with provider = \"file\"".into())
            }
            ProviderKind::Http if self.embedding.http.is_none() => {
                return bad("embedding.http is required with provider = \"http\"".into())
            }
            _ => {}
        }
        if self.embedding.dim == 0 {
            return bad("embedding.dim must be positive".into());
        }
        if self.jobs == Some(0) {
            return bad("jobs must be at least 1".into());
        }
        if let Some(s) = &self.dataset.simplifier {
            if s.offline_table.is_some() == s.chat.is_some() {
                return bad("dataset.simplifier needs exactly one of offline_table and chat".into());
            }
        }
        if self.evaluation.hypotheses.is_some() != self.evaluation.references.is_some() {
            return bad("evaluation.hypotheses and evaluation.references go together".into());
        }
        self.cleaning.params.validate().map_err(|e| CliError::Config(format!("cleaning.params: {e}")))?;
        self.dataset
            .paragraphs
            .validate()
            .map_err(|e| CliError::Config(format!("dataset.paragraphs: {e}")))?;
        Ok(())
    }

    pub fn journal_path(&self) -> PathBuf {
        self.annotation
            .journal
            .clone()
            .unwrap_or_else(|| self.out_dir.join("annotation/labels.jsonl"))
    }

    pub fn mqm_journal_path(&self) -> PathBuf {
        self.annotation
            .mqm_journal
            .clone()
            .unwrap_or_else(|| self.out_dir.join("annotation/mqm.jsonl"))
    }

    pub fn cache_dir(&self) -> PathBuf {
        self.embedding
            .cache_dir
            .clone()
            .unwrap_or_else(|| self.out_dir.join("cache/embeddings"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[inputs]
reference = "ref.jsonl"
general = "gen.tsv"

[embedding]
vectors = "v.cvec"
dim = 8
"#;

    #[test]
    fn defaults_fill_in() {
        let cfg = PipelineConfig::parse(MINIMAL).unwrap();
        assert_eq!(cfg.retrieval.k, 5);
        assert_eq!(cfg.retrieval.top_k, 50_000);
        assert_eq!(cfg.threshold.num_partitions, 6);
        assert_eq!(cfg.threshold.per_partition, 50);
        assert_eq!(cfg.cleaning.params.min_words, 8);
        assert_eq!(cfg.evaluation.da_threshold, 75.0);
        cfg.validate().unwrap();
    }

    #[test]
    fn unknown_key_names_its_path() {
        let text = format!("{MINIMAL}\n[retrieval]\nk = 5\ntopk = 10\n");
        let err = PipelineConfig::parse(&text).unwrap_err().to_string();
        assert!(err.contains("retrieval") && err.contains("topk"), "{err}");
        let err = PipelineConfig::parse(&format!("{MINIMAL}\n[retrieval]\nk = \"five\"\n"))
            .unwrap_err()
            .to_string();
        assert!(err.contains("retrieval.k"), "{err}");
    }

    #[test]
    fn relative_paths_resolve_against_config_dir() {
        let mut cfg = PipelineConfig::parse(MINIMAL).unwrap();
        cfg.resolve_paths(Path::new("/data/run"));
        assert_eq!(cfg.inputs.reference, Path::new("/data/run/ref.jsonl"));
        assert_eq!(cfg.out_dir, Path::new("/data/run/out"));
        assert_eq!(cfg.journal_path(), Path::new("/data/run/out/annotation/labels.jsonl"));
    }

    #[test]
    fn cross_field_checks() {
        let no_vectors = MINIMAL.replace("vectors = \"v.cvec\"\n", "");
        assert!(PipelineConfig::parse(&no_vectors).unwrap().validate().is_err());
        let both = format!("{MINIMAL}\n[dataset.simplifier]\noffline_table = \"t.jsonl\"\n[dataset.simplifier.chat.endpoint]\nurl = \"http://x\"\n");
        assert!(PipelineConfig::parse(&both).unwrap().validate().is_err());
    }
}
