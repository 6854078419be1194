//! Pipeline stages. Every stage reads its inputs from `out_dir` (or the
//! configured external files), writes its artifacts under `out_dir` and
//! records a manifest in `out_dir/manifests/<stage>.json`.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::config::{DpoSource, Filter, PipelineConfig, ProviderKind};
use crate::error::{CliError, CliResult};
use crate::report;
use crisismine_core::cleaning::{
    detector_by_name, exact_dedup, language_filter, length_filter, near_dedup, wellformedness_filter,
    CleaningReport, FilterStep, HeuristicWellformedness,
};
use crisismine_core::corpus::{parse_jsonl, read_corpus, serialize_corpus, Corpus, CorpusFormat, PipelineManifest, Side};
use crisismine_core::dataset::{
    build_paragraphs, build_preference_pairs, gate_violations, pairs_to_dpo_jsonl, parse_dpo_jsonl,
    rejections_to_jsonl, review_sample, review_worksheet_csv, sft_records, AdequacyScorer, Granularity, OfflineTable,
    SimplificationClient,
};
use crisismine_core::digest::{sha256_hex, write_artifact};
use crisismine_core::embedding::{embed_segments, vecfile, EmbeddingCache, EmbeddingMatrix, EmbeddingProvider, FileProvider};
use crisismine_core::mteval::{
    bubble_csv, error_table_markdown, evaluate_corpus, evaluation_summary, export_bubble_data, parse_evaluations_jsonl,
    BleuConfig, ChrfConfig, ExternalScorer, SummaryConfig,
};
use crisismine_core::readability::{corpus_readability, readability_report};
use crisismine_core::retrieval::{kmeans_cluster, ranked_from_jsonl, ranked_to_jsonl, retrieve_topk, CentroidSet};
use crisismine_core::threshold::{
    adjudicate, labels_to_jsonl, make_partitions, parse_labels_csv, parse_labels_jsonl, sample_for_annotation,
    select_threshold, validate_labels, AnnotationBatch, Partition,
};
use crisismine_core::Error;
use crisismine_net::server::{parse_mqm_items_jsonl, serve_until_interrupted};
use crisismine_net::{
    AnnotationService, ChatClient, HttpAdequacyScorer, HttpEmbeddingProvider, HttpMetricScorer,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Clean,
    Embed,
    Cluster,
    Retrieve,
    Partition,
    Sample,
    ServeAnnotation,
    ImportLabels,
    Threshold,
    BuildSft,
    BuildDpo,
    Readability,
    Evaluate,
    ScoreMqm,
    Report,
}

impl Stage {
    pub const ALL: [Stage; 15] = [
        Stage::Clean,
        Stage::Embed,
        Stage::Cluster,
        Stage::Retrieve,
        Stage::Partition,
        Stage::Sample,
        Stage::ServeAnnotation,
        Stage::ImportLabels,
        Stage::Threshold,
        Stage::BuildSft,
        Stage::BuildDpo,
        Stage::Readability,
        Stage::Evaluate,
        Stage::ScoreMqm,
        Stage::Report,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Clean => "clean",
            Stage::Embed => "embed",
            Stage::Cluster => "cluster",
            Stage::Retrieve => "retrieve",
            Stage::Partition => "partition",
            Stage::Sample => "sample",
            Stage::ServeAnnotation => "serve_annotation",
            Stage::ImportLabels => "import_labels",
            Stage::Threshold => "threshold",
            Stage::BuildSft => "build_sft",
            Stage::BuildDpo => "build_dpo",
            Stage::Readability => "readability",
            Stage::Evaluate => "evaluate",
            Stage::ScoreMqm => "score_mqm",
            Stage::Report => "report",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.as_str())
    }
}

impl FromStr for Stage {
    type Err = CliError;

    fn from_str(s: &str) -> CliResult<Self> {
        let key = s.replace('-', "_");
        Stage::ALL
            .into_iter()
            .find(|st| st.as_str() == key)
            .ok_or_else(|| CliError::Config(format!("unknown stage `{s}`")))
    }
}

/// Artifact paths relative to `out_dir`.
pub mod artifacts {
    pub const CLEAN_REFERENCE: &str = "clean/reference.jsonl";
    pub const CLEAN_GENERAL: &str = "clean/general.jsonl";
    pub const CLEAN_REPORT: &str = "clean/report.json";
    pub const EMBED_REFERENCE: &str = "embed/reference.cvec";
    pub const EMBED_GENERAL: &str = "embed/general.cvec";
    pub const CENTROIDS: &str = "cluster/centroids.json";
    pub const RANKED: &str = "retrieve/ranked.jsonl";
    pub const PARTITIONS: &str = "partition/partitions.json";
    pub const BATCH: &str = "sample/batch.jsonl";
    pub const JOURNAL: &str = "annotation/labels.jsonl";
    pub const LABELS: &str = "labels/labels.jsonl";
    pub const ADJUDICATION: &str = "labels/adjudication.json";
    pub const THRESHOLD: &str = "threshold/threshold.json";
    pub const RETAINED: &str = "threshold/retained.jsonl";
    pub const SFT: &str = "datasets/sft.jsonl";
    pub const DPO: &str = "datasets/dpo.jsonl";
    pub const DPO_REJECTIONS: &str = "datasets/dpo_rejections.jsonl";
    pub const DPO_REVIEW: &str = "datasets/dpo_review.csv";
    pub const DPO_AUDIT: &str = "datasets/dpo_audit.jsonl";
    pub const READABILITY: &str = "readability/readability.json";
    pub const SCORES: &str = "evaluate/scores.json";
    pub const MQM_SUMMARY: &str = "mqm/summary.json";
    pub const MQM_BUBBLE: &str = "mqm/bubble.csv";
    pub const MQM_ERRORS: &str = "mqm/errors.md";
    pub const REPORT_MD: &str = "report.md";
    pub const REPORT_JSON: &str = "report.json";
}

use artifacts as a;

pub const EXTERNAL_PREFIX: &str = "external:";

pub fn manifest_path(out_dir: &Path, stage: Stage) -> PathBuf {
    out_dir.join("manifests").join(format!("{stage}.json"))
}

/// Collects inputs and outputs of one stage run and writes its manifest.
pub struct StageRecord<'a> {
    out_dir: &'a Path,
    manifest: PipelineManifest,
}

impl<'a> StageRecord<'a> {
    fn new(out_dir: &'a Path, stage: Stage) -> Self {
        StageRecord {
            out_dir,
            manifest: PipelineManifest::new(stage.as_str()),
        }
    }

    /// Reads an artifact produced by an earlier stage and records its digest.
    fn read_artifact(&mut self, rel: &str) -> CliResult<Vec<u8>> {
        let path = self.out_dir.join(rel);
        let bytes = std::fs::read(&path).map_err(|e| Error::io(&path, e))?;
        self.manifest.inputs.insert(rel.to_string(), sha256_hex(&bytes));
        Ok(bytes)
    }

    fn read_artifact_text(&mut self, rel: &str) -> CliResult<String> {
        let bytes = self.read_artifact(rel)?;
        String::from_utf8(bytes).map_err(|_| Error::Data(format!("{rel} is not UTF-8")).into())
    }

    /// Records an input that lives outside `out_dir`.
    fn read_external(&mut self, name: &str, path: &Path) -> CliResult<Vec<u8>> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        self.manifest
            .inputs
            .insert(format!("{EXTERNAL_PREFIX}{name}"), sha256_hex(&bytes));
        Ok(bytes)
    }

    fn write(&mut self, rel: &str, bytes: &[u8]) -> CliResult<()> {
        let digest = write_artifact(&self.out_dir.join(rel), bytes)?;
        self.manifest.outputs.insert(rel.to_string(), digest);
        Ok(())
    }

    fn write_json<T: Serialize>(&mut self, rel: &str, value: &T) -> CliResult<()> {
        let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| Error::Data(e.to_string()))?;
        bytes.push(b'\n');
        self.write(rel, &bytes)
    }

    fn param(&mut self, key: &str, value: impl ToString) {
        self.manifest.parameters.insert(key.to_string(), value.to_string());
    }

    fn count(&mut self, key: &str, value: usize) {
        self.manifest.counts.insert(key.to_string(), value as u64);
    }

    fn finish(mut self, input_count: usize, output_count: usize) -> CliResult<PipelineManifest> {
        self.manifest.input_count = input_count as u64;
        self.manifest.output_count = output_count as u64;
        let mut listing = String::new();
        for (k, d) in &self.manifest.outputs {
            listing.push_str(&format!("{k}\t{d}\n"));
        }
        self.manifest.content_digest = sha256_hex(listing.as_bytes());
        let stage: Stage = self.manifest.stage_name.parse()?;
        let mut bytes = serde_json::to_vec_pretty(&self.manifest).map_err(|e| Error::Data(e.to_string()))?;
        bytes.push(b'\n');
        write_artifact(&manifest_path(self.out_dir, stage), &bytes)?;
        Ok(self.manifest)
    }
}

/// What a full run did with each stage.
#[derive(Debug, Clone, PartialEq)]
pub enum StageOutcome {
    Ran(PipelineManifest),
    Skipped(String),
}

pub struct Pipeline {
    cfg: PipelineConfig,
    pool: rayon::ThreadPool,
}

fn corpus_from_bytes(name: &str, bytes: &[u8]) -> CliResult<Corpus> {
    let text = std::str::from_utf8(bytes).map_err(|_| Error::Data(format!("{name} is not UTF-8")))?;
    Ok(parse_jsonl(name, text)?)
}

fn lines(name: &str, bytes: &[u8]) -> CliResult<Vec<String>> {
    let text = std::str::from_utf8(bytes).map_err(|_| Error::Data(format!("{name} is not UTF-8")))?;
    Ok(text.lines().map(str::to_string).collect())
}

impl Pipeline {
    pub fn new(cfg: PipelineConfig) -> CliResult<Self> {
        cfg.validate()?;
        let mut builder = rayon::ThreadPoolBuilder::new();
        if let Some(j) = cfg.jobs {
            builder = builder.num_threads(j);
        }
        let pool = builder
            .build()
            .map_err(|e| CliError::Config(format!("cannot start {} worker threads: {e}", cfg.jobs.unwrap_or(0))))?;
        Ok(Pipeline { cfg, pool })
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.cfg
    }

    pub fn out_dir(&self) -> &Path {
        &self.cfg.out_dir
    }

    fn require(&self, stage: Stage, rel: &str, producer: Stage) -> CliResult<()> {
        if self.cfg.out_dir.join(rel).is_file() {
            Ok(())
        } else {
            Err(CliError::Dependency {
                stage,
                artifact: rel.to_string(),
                producer,
            })
        }
    }

    /// Runs one stage. `serve_annotation` blocks until interrupted.
    pub fn run_stage(&self, stage: Stage) -> CliResult<PipelineManifest> {
        self.pool.install(|| match stage {
            Stage::Clean => self.clean(),
            Stage::Embed => self.embed(),
            Stage::Cluster => self.cluster(),
            Stage::Retrieve => self.retrieve(),
            Stage::Partition => self.partition(),
            Stage::Sample => self.sample(),
            Stage::ServeAnnotation => self.serve_annotation(|addr| eprintln!("annotation service on http://{addr}")),
            Stage::ImportLabels => self.import_labels(),
            Stage::Threshold => self.threshold(),
            Stage::BuildSft => self.build_sft(),
            Stage::BuildDpo => self.build_dpo(),
            Stage::Readability => self.readability(),
            Stage::Evaluate => self.evaluate(),
            Stage::ScoreMqm => self.score_mqm(),
            Stage::Report => report::run(&self.cfg.out_dir),
        })
    }

    /// Why `stage` would be skipped by [`Pipeline::run_all`], if it would.
    pub fn skip_reason(&self, stage: Stage) -> Option<String> {
        let cfg = &self.cfg;
        match stage {
            Stage::ServeAnnotation => Some("interactive; run it on its own".into()),
            Stage::BuildDpo if cfg.dataset.simplifier.is_none() => Some("dataset.simplifier is not configured".into()),
            Stage::Evaluate if cfg.evaluation.hypotheses.is_none() => {
                Some("evaluation.hypotheses is not configured".into())
            }
            Stage::ScoreMqm if cfg.evaluation.mqm_annotations.is_none() && !cfg.mqm_journal_path().is_file() => {
                Some("no MQM annotations configured or journaled".into())
            }
            _ => None,
        }
    }

    /// Runs every non-interactive stage in order, skipping optional stages
    /// that are not configured, and finishes with `report`.
    pub fn run_all(&self) -> CliResult<Vec<(Stage, StageOutcome)>> {
        let mut out = Vec::new();
        for stage in Stage::ALL {
            let outcome = match self.skip_reason(stage) {
                Some(why) => StageOutcome::Skipped(why),
                None => StageOutcome::Ran(self.run_stage(stage)?),
            };
            out.push((stage, outcome));
        }
        Ok(out)
    }

    fn clean(&self) -> CliResult<PipelineManifest> {
        let cfg = &self.cfg;
        let mut rec = StageRecord::new(&cfg.out_dir, Stage::Clean);
        let params = &cfg.cleaning.params;
        let detector = detector_by_name(&params.detector)?;
        let wf = HeuristicWellformedness::default();
        let mut reports = BTreeMap::new();
        let mut raw_total = 0;
        let mut clean_total = 0;
        for (name, path, filters, rel) in [
            ("reference", &cfg.inputs.reference, &cfg.cleaning.reference_filters, a::CLEAN_REFERENCE),
            ("general", &cfg.inputs.general, &cfg.cleaning.general_filters, a::CLEAN_GENERAL),
        ] {
            rec.read_external(name, path)?;
            let corpus = read_corpus(path, CorpusFormat::from_path(path))?;
            let mut steps = Vec::new();
            let mut c = corpus.clone();
            for f in filters {
                let next = match f {
                    Filter::ExactDedup => exact_dedup(&c),
                    Filter::NearDedup => near_dedup(&c, params),
                    Filter::Length => length_filter(&c, params),
                    Filter::Wellformedness => wellformedness_filter(&c, &wf),
                    Filter::Language => language_filter(&c, params, detector.as_ref())?,
                };
                rec.count(&format!("{name}.{}.removed", f.as_str()), c.len() - next.len());
                steps.push(FilterStep {
                    filter: f.as_str().to_string(),
                    input: c.len(),
                    output: next.len(),
                });
                c = next;
            }
            if c.is_empty() {
                return Err(Error::Data(format!("cleaning removed every segment of the {name} corpus")).into());
            }
            rec.count(&format!("{name}.raw"), corpus.len());
            rec.count(&format!("{name}.clean"), c.len());
            raw_total += corpus.len();
            clean_total += c.len();
            rec.write(rel, &serialize_corpus(&c, CorpusFormat::Jsonl)?)?;
            reports.insert(
                name,
                CleaningReport {
                    raw: corpus.len(),
                    clean: c.len(),
                    steps,
                },
            );
        }
        rec.write_json(a::CLEAN_REPORT, &reports)?;
        for (k, v) in [
            ("min_words", params.min_words.to_string()),
            ("near_dup_threshold", params.near_dup_threshold.to_string()),
            ("num_permutations", params.num_permutations.to_string()),
            ("shingle_size", params.shingle_size.to_string()),
            ("bands", params.bands.to_string()),
            ("rows_per_band", params.rows_per_band.to_string()),
            ("languages", format!("{}-{}", params.source_lang, params.target_lang)),
            ("seed", params.seed.to_string()),
        ] {
            rec.param(k, v);
        }
        rec.finish(raw_total, clean_total)
    }

    fn provider(&self) -> CliResult<Box<dyn EmbeddingProvider>> {
        let e = &self.cfg.embedding;
        Ok(match e.provider {
            ProviderKind::File => {
                let path = e.vectors.as_ref().expect("validated");
                Box::new(FileProvider::open(path)?)
            }
            ProviderKind::Http => {
                let h = e.http.as_ref().expect("validated");
                Box::new(
                    HttpEmbeddingProvider::new(h.endpoint.clone(), h.model.clone(), e.dim)?
                        .with_path(h.path.clone())
                        .with_batch_size(h.batch_size)
                        .with_concurrency(h.concurrency),
                )
            }
        })
    }

    fn embed(&self) -> CliResult<PipelineManifest> {
        let cfg = &self.cfg;
        self.require(Stage::Embed, a::CLEAN_REFERENCE, Stage::Clean)?;
        self.require(Stage::Embed, a::CLEAN_GENERAL, Stage::Clean)?;
        let mut rec = StageRecord::new(&cfg.out_dir, Stage::Embed);
        let provider = self.provider()?;
        if let Some(path) = &cfg.embedding.vectors {
            if cfg.embedding.provider == ProviderKind::File {
                rec.read_external("vectors", path)?;
            }
        }
        let cache = EmbeddingCache::new(cfg.cache_dir());
        let mut rows = 0;
        for (src, dst) in [(a::CLEAN_REFERENCE, a::EMBED_REFERENCE), (a::CLEAN_GENERAL, a::EMBED_GENERAL)] {
            let corpus = corpus_from_bytes(src, &rec.read_artifact(src)?)?;
            let m = embed_segments(&corpus, provider.as_ref(), cfg.embedding.side, cfg.embedding.dim, Some(&cache))?;
            rows += m.len();
            rec.write(dst, &vecfile::encode(&m))?;
        }
        rec.param("provider", provider.fingerprint());
        rec.param("dim", cfg.embedding.dim);
        rec.param("side", cfg.embedding.side);
        rec.finish(rows, rows)
    }

    fn cluster(&self) -> CliResult<PipelineManifest> {
        let cfg = &self.cfg;
        self.require(Stage::Cluster, a::EMBED_REFERENCE, Stage::Embed)?;
        let mut rec = StageRecord::new(&cfg.out_dir, Stage::Cluster);
        let m = vecfile::decode(&rec.read_artifact(a::EMBED_REFERENCE)?)?;
        let set = kmeans_cluster(&m, cfg.retrieval.k, cfg.retrieval.seed)?;
        rec.write_json(a::CENTROIDS, &set)?;
        rec.param("k", set.k);
        rec.param("seed", set.seed);
        rec.count("iterations", set.iterations);
        for (j, s) in set.cluster_sizes().iter().enumerate() {
            rec.count(&format!("cluster.{j}.size"), *s);
        }
        rec.finish(m.len(), set.k)
    }

    fn retrieve(&self) -> CliResult<PipelineManifest> {
        let cfg = &self.cfg;
        self.require(Stage::Retrieve, a::CENTROIDS, Stage::Cluster)?;
        self.require(Stage::Retrieve, a::EMBED_GENERAL, Stage::Embed)?;
        let mut rec = StageRecord::new(&cfg.out_dir, Stage::Retrieve);
        let set: CentroidSet =
            serde_json::from_slice(&rec.read_artifact(a::CENTROIDS)?).map_err(|e| Error::Data(format!("{}: {e}", a::CENTROIDS)))?;
        let cands = vecfile::decode(&rec.read_artifact(a::EMBED_GENERAL)?)?;
        let r = retrieve_topk(&cands, &set, cfg.retrieval.top_k)?;
        if r.truncated {
            rec.manifest.warnings.push(format!(
                "top_k {} exceeds the {} candidates; all were ranked",
                cfg.retrieval.top_k,
                cands.len()
            ));
        }
        rec.write(a::RANKED, ranked_to_jsonl(&r.ranked).as_bytes())?;
        rec.param("top_k", cfg.retrieval.top_k);
        rec.finish(cands.len(), r.ranked.len())
    }

    fn read_partitions(&self, rec: &mut StageRecord) -> CliResult<Vec<Partition>> {
        serde_json::from_slice(&rec.read_artifact(a::PARTITIONS)?)
            .map_err(|e| Error::Data(format!("{}: {e}", a::PARTITIONS)).into())
    }

    fn partition(&self) -> CliResult<PipelineManifest> {
        let cfg = &self.cfg;
        self.require(Stage::Partition, a::RANKED, Stage::Retrieve)?;
        let mut rec = StageRecord::new(&cfg.out_dir, Stage::Partition);
        let ranked = ranked_from_jsonl(&rec.read_artifact_text(a::RANKED)?)?;
        let parts = make_partitions(&ranked, cfg.threshold.num_partitions)?;
        rec.write_json(a::PARTITIONS, &parts)?;
        rec.param("num_partitions", parts.len());
        rec.finish(ranked.len(), parts.iter().map(Partition::len).sum())
    }

    fn sample(&self) -> CliResult<PipelineManifest> {
        let cfg = &self.cfg;
        self.require(Stage::Sample, a::PARTITIONS, Stage::Partition)?;
        self.require(Stage::Sample, a::CLEAN_GENERAL, Stage::Clean)?;
        let mut rec = StageRecord::new(&cfg.out_dir, Stage::Sample);
        let parts = self.read_partitions(&mut rec)?;
        let general = corpus_from_bytes(a::CLEAN_GENERAL, &rec.read_artifact(a::CLEAN_GENERAL)?)?;
        let mut batch = sample_for_annotation(&parts, cfg.threshold.per_partition, cfg.threshold.seed)?;
        batch.attach_texts(&general);
        rec.write(a::BATCH, batch.to_jsonl().as_bytes())?;
        rec.param("per_partition", cfg.threshold.per_partition);
        rec.param("seed", cfg.threshold.seed);
        rec.finish(parts.iter().map(Partition::len).sum(), batch.items.len())
    }

    fn read_batch(&self, rec: &mut StageRecord) -> CliResult<AnnotationBatch> {
        Ok(AnnotationBatch::from_jsonl(&rec.read_artifact_text(a::BATCH)?)?)
    }

    /// Serves the annotation API over the sampled batch until Ctrl-C, then
    /// records the journal.
    pub fn serve_annotation(&self, on_bound: impl FnOnce(SocketAddr)) -> CliResult<PipelineManifest> {
        let cfg = &self.cfg;
        self.require(Stage::ServeAnnotation, a::BATCH, Stage::Sample)?;
        let mut rec = StageRecord::new(&cfg.out_dir, Stage::ServeAnnotation);
        let batch = self.read_batch(&mut rec)?;
        let n_items = batch.items.len();
        let addr: SocketAddr = cfg
            .annotation
            .bind
            .parse()
            .map_err(|e| CliError::Config(format!("annotation.bind `{}`: {e}", cfg.annotation.bind)))?;
        let journal = cfg.journal_path();
        let mut svc = AnnotationService::open(batch, &journal)?;
        if let Some(items_path) = &cfg.annotation.mqm_items {
            let bytes = rec.read_external("mqm_items", items_path)?;
            let items = parse_mqm_items_jsonl(&items_path.display().to_string(), &String::from_utf8_lossy(&bytes))?;
            svc = svc.with_mqm(items, &cfg.mqm_journal_path())?;
        }
        if let Some(ui) = &cfg.annotation.ui_dir {
            svc = svc.with_ui_dir(ui);
        }
        serve_until_interrupted(svc.router(), addr, on_bound)?;
        let labels = std::fs::read(&journal).unwrap_or_default();
        match journal.strip_prefix(&cfg.out_dir) {
            Ok(rel) => rec.write(&rel.to_string_lossy(), &labels)?,
            Err(_) => {
                rec.manifest
                    .outputs
                    .insert(format!("{EXTERNAL_PREFIX}journal"), sha256_hex(&labels));
            }
        }
        let n_labels = labels.split(|&b| b == b'\n').filter(|l| !l.is_empty()).count();
        rec.finish(n_items, n_labels)
    }

    fn import_labels(&self) -> CliResult<PipelineManifest> {
        let cfg = &self.cfg;
        self.require(Stage::ImportLabels, a::BATCH, Stage::Sample)?;
        let mut rec = StageRecord::new(&cfg.out_dir, Stage::ImportLabels);
        let batch = self.read_batch(&mut rec)?;
        let (path, bytes) = match &cfg.annotation.labels {
            Some(p) => (p.clone(), rec.read_external("labels", p)?),
            None => {
                let journal = cfg.journal_path();
                if !journal.is_file() {
                    return Err(CliError::Dependency {
                        stage: Stage::ImportLabels,
                        artifact: journal.display().to_string(),
                        producer: Stage::ServeAnnotation,
                    });
                }
                let bytes = rec.read_external("journal", &journal)?;
                (journal, bytes)
            }
        };
        let text = String::from_utf8(bytes).map_err(|_| Error::Data(format!("{} is not UTF-8", path.display())))?;
        let mut labels = match path.extension().and_then(|e| e.to_str()) {
            Some("csv") => parse_labels_csv(&text)?,
            _ => parse_labels_jsonl(&text)?,
        };
        let total = labels.len();
        if cfg.annotation.labels_allow_extra {
            let ids: HashSet<&str> = batch.items.iter().map(|i| i.segment_id.as_str()).collect();
            labels.retain(|l| ids.contains(l.segment_id.as_str()));
            rec.count("dropped_outside_batch", total - labels.len());
        }
        let import = validate_labels(&batch, labels)?;
        let mut labels = import.labels;
        labels.sort_by(|x, y| (&x.segment_id, &x.annotator).cmp(&(&y.segment_id, &y.annotator)));
        rec.write(a::LABELS, labels_to_jsonl(&labels).as_bytes())?;
        rec.write_json(
            a::ADJUDICATION,
            &json!({
                "needs_adjudication": import.needs_adjudication,
                "adjudicated": adjudicate(&labels),
            }),
        )?;
        let unlabelled = batch
            .items
            .iter()
            .filter(|it| !labels.iter().any(|l| l.segment_id == it.segment_id))
            .count();
        rec.count("unlabelled_items", unlabelled);
        rec.count("needs_adjudication", import.needs_adjudication.len());
        rec.param("allow_extra", cfg.annotation.labels_allow_extra);
        rec.finish(total, labels.len())
    }

    fn threshold(&self) -> CliResult<PipelineManifest> {
        let cfg = &self.cfg;
        self.require(Stage::Threshold, a::PARTITIONS, Stage::Partition)?;
        self.require(Stage::Threshold, a::LABELS, Stage::ImportLabels)?;
        self.require(Stage::Threshold, a::CLEAN_GENERAL, Stage::Clean)?;
        let mut rec = StageRecord::new(&cfg.out_dir, Stage::Threshold);
        let parts = self.read_partitions(&mut rec)?;
        let labels = parse_labels_jsonl(&rec.read_artifact_text(a::LABELS)?)?;
        let general = corpus_from_bytes(a::CLEAN_GENERAL, &rec.read_artifact(a::CLEAN_GENERAL)?)?;
        let mut decision = select_threshold(&parts, &labels)?;
        if let Some(n) = cfg.threshold.retain_top {
            decision = decision.with_retain_top(&parts, n);
            rec.param("retain_top", n);
        }
        let by_id: BTreeMap<&str, _> = general.segments.iter().map(|s| (s.id.as_str(), s)).collect();
        let retained: Vec<_> = decision
            .retained_ids
            .iter()
            .map(|id| {
                by_id
                    .get(id.as_str())
                    .map(|s| (*s).clone())
                    .ok_or_else(|| Error::MissingIds(vec![id.clone()]))
            })
            .collect::<Result<_, _>>()?;
        let retained = general.with_segments(retained);
        rec.write_json(a::THRESHOLD, &decision)?;
        rec.write(a::RETAINED, &serialize_corpus(&retained, CorpusFormat::Jsonl)?)?;
        rec.param(
            "cut_partition",
            decision.cut_partition.map_or("none".to_string(), |c| c.to_string()),
        );
        rec.count("retained_rank_max", decision.retained_rank_max);
        if decision.empty_retention {
            rec.manifest.warnings.push("the first partition is already majority out-of-domain".into());
        }
        rec.finish(parts.iter().map(Partition::len).sum(), retained.len())
    }

    fn build_sft(&self) -> CliResult<PipelineManifest> {
        let cfg = &self.cfg;
        self.require(Stage::BuildSft, a::RETAINED, Stage::Threshold)?;
        self.require(Stage::BuildSft, a::EMBED_GENERAL, Stage::Embed)?;
        let mut rec = StageRecord::new(&cfg.out_dir, Stage::BuildSft);
        let retained = corpus_from_bytes(a::RETAINED, &rec.read_artifact(a::RETAINED)?)?;
        let emb = vecfile::decode(&rec.read_artifact(a::EMBED_GENERAL)?)?;
        let examples = build_paragraphs(&retained, &emb, &cfg.dataset.paragraphs)?;
        let mut bytes = Vec::new();
        for r in sft_records(&examples, &cfg.dataset.sft_instruction)? {
            serde_json::to_writer(&mut bytes, &r).map_err(|e| Error::Data(e.to_string()))?;
            bytes.push(b'\n');
        }
        rec.write(a::SFT, &bytes)?;
        let paragraphs = examples.iter().filter(|e| e.granularity == Granularity::Paragraph).count();
        rec.count("paragraph_examples", paragraphs);
        rec.count("sentence_examples", examples.len() - paragraphs);
        rec.param("target_ratio", cfg.dataset.paragraphs.target_ratio);
        rec.param("seed", cfg.dataset.paragraphs.seed);
        rec.finish(retained.len(), examples.len())
    }

    fn simplifier(&self, rec: &mut StageRecord) -> CliResult<Box<dyn SimplificationClient>> {
        let Some(s) = &self.cfg.dataset.simplifier else {
            return Err(CliError::Config("dataset.simplifier is not configured".into()));
        };
        if let Some(table) = &s.offline_table {
            let bytes = rec.read_external("offline_table", table)?;
            let text = String::from_utf8(bytes).map_err(|_| Error::Data(format!("{} is not UTF-8", table.display())))?;
            return Ok(Box::new(OfflineTable::parse(&table.display().to_string(), &text)?));
        }
        let chat = s.chat.as_ref().expect("validated");
        Ok(Box::new(ChatClient::new(chat.endpoint.clone())?.with_path(chat.path.clone())))
    }

    fn build_dpo(&self) -> CliResult<PipelineManifest> {
        let cfg = &self.cfg;
        let ds = &cfg.dataset;
        let source = match ds.dpo_source {
            DpoSource::Reference => {
                self.require(Stage::BuildDpo, a::CLEAN_REFERENCE, Stage::Clean)?;
                a::CLEAN_REFERENCE
            }
            DpoSource::Retained => {
                self.require(Stage::BuildDpo, a::RETAINED, Stage::Threshold)?;
                a::RETAINED
            }
        };
        let mut rec = StageRecord::new(&cfg.out_dir, Stage::BuildDpo);
        let client = self.simplifier(&mut rec)?;
        let mut corpus = corpus_from_bytes(source, &rec.read_artifact(source)?)?;
        let simp = ds.simplifier.as_ref().expect("checked by simplifier()");
        let adequacy = ds.adequacy.as_ref().map(|e| HttpAdequacyScorer::new(e.clone())).transpose()?;
        let scorer = adequacy.as_ref().map(|s| s as &dyn AdequacyScorer);
        if let Some(t) = &simp.prompt_template {
            rec.param("prompt_template", sha256_hex(t.as_bytes()));
        }
        let audit_path = cfg.out_dir.join(a::DPO_AUDIT);
        let _ = std::fs::remove_file(&audit_path);
        let audit = crisismine_core::dataset::AuditLog::create(&audit_path)?;
        corpus.segments.sort_by(|x, y| x.id.cmp(&y.id));
        let client = RequestOverrides {
            inner: client.as_ref(),
            template: simp.prompt_template.clone(),
            params: simp.params.clone(),
        };
        let outcome = build_preference_pairs(&corpus, &client, &ds.gate, scorer, &ds.preference, Some(&audit))?;
        drop(audit);
        // calls finish in thread order; sort so the archive is reproducible
        let audit_text = std::fs::read_to_string(&audit_path).map_err(|e| Error::io(&audit_path, e))?;
        let mut audit_lines: Vec<&str> = audit_text.lines().collect();
        audit_lines.sort_unstable();
        let mut audit_bytes = audit_lines.join("\n").into_bytes();
        if !audit_bytes.is_empty() {
            audit_bytes.push(b'\n');
        }
        rec.write(a::DPO_AUDIT, &audit_bytes)?;

        let dpo = pairs_to_dpo_jsonl(&outcome.pairs);
        let recheck = gate_violations(&parse_dpo_jsonl(a::DPO, &dpo)?, &ds.gate, scorer);
        if !recheck.is_empty() {
            return Err(Error::Data(format!("{} emitted pairs fail the gate on re-check", recheck.len())).into());
        }
        rec.write(a::DPO, dpo.as_bytes())?;
        rec.write(a::DPO_REJECTIONS, rejections_to_jsonl(&outcome.rejections).as_bytes())?;
        let sample = review_sample(
            &outcome.pairs,
            ds.preference.review_size,
            ds.preference.review_strata,
            ds.preference.seed,
        )?;
        rec.write(a::DPO_REVIEW, review_worksheet_csv(&outcome.pairs, &sample)?.as_bytes())?;

        let gains: Vec<f64> = outcome.pairs.iter().filter_map(|p| p.gate_report.gain).collect();
        if !gains.is_empty() {
            let mean = gains.iter().sum::<f64>() / gains.len() as f64;
            rec.param("mean_fre_gain", format!("{mean:.4}"));
        }
        rec.count("pairs", outcome.pairs.len());
        rec.count("rejections", outcome.rejections.len());
        rec.count("review_items", sample.len());
        rec.param("simplifier", client.name());
        rec.param("min_gain", ds.gate.min_gain);
        rec.param("fre_floor", ds.gate.fre_floor);
        rec.param("min_adequacy", ds.gate.min_adequacy);
        rec.param(
            "adequacy",
            scorer.map_or("content_overlap".to_string(), |s| s.name()),
        );
        rec.finish(corpus.len(), outcome.pairs.len())
    }

    fn readability(&self) -> CliResult<PipelineManifest> {
        let cfg = &self.cfg;
        self.require(Stage::Readability, a::RETAINED, Stage::Threshold)?;
        let mut rec = StageRecord::new(&cfg.out_dir, Stage::Readability);
        let retained = corpus_from_bytes(a::RETAINED, &rec.read_artifact(a::RETAINED)?)?;
        let mut report = serde_json::Map::new();
        let mut scored = 0;
        if !retained.is_empty() {
            let r = corpus_readability(&retained, Side::Target)?;
            scored += r.scored;
            report.insert("retained_target".into(), serde_json::to_value(&r).expect("serializable"));
        }
        let mut inputs = retained.len();
        if cfg.out_dir.join(a::DPO).is_file() {
            let recs = parse_dpo_jsonl(a::DPO, &rec.read_artifact_text(a::DPO)?)?;
            inputs += 2 * recs.len();
            if !recs.is_empty() {
                let side = |pick: fn(&crisismine_core::dataset::DpoRecord) -> &str| {
                    Corpus::new(
                        "dpo",
                        recs.iter()
                            .enumerate()
                            .map(|(i, r)| crisismine_core::corpus::Segment::new(format!("dpo:{i}"), "-", pick(r), "dpo"))
                            .collect(),
                    )
                };
                let chosen = corpus_readability(&side(|r| &r.chosen), Side::Target)?;
                let rejected = corpus_readability(&side(|r| &r.rejected), Side::Target)?;
                let deltas: Vec<f64> = recs
                    .iter()
                    .filter_map(|r| {
                        let c = readability_report(&r.chosen).ok()?;
                        let o = readability_report(&r.rejected).ok()?;
                        Some(c.fre - o.fre)
                    })
                    .collect();
                let min_delta = deltas.iter().copied().fold(f64::INFINITY, f64::min);
                let fre_delta = chosen.fre.mean - rejected.fre.mean;
                scored += chosen.scored + rejected.scored;
                rec.param("dpo_fre_delta", format!("{fre_delta:.4}"));
                report.insert(
                    "dpo".into(),
                    json!({
                        "pairs": recs.len(),
                        "chosen": chosen,
                        "rejected": rejected,
                        "fre_delta_mean": fre_delta,
                        "fre_delta_min": min_delta,
                    }),
                );
            }
        }
        rec.write_json(a::READABILITY, &report)?;
        rec.finish(inputs, scored)
    }

    fn evaluate(&self) -> CliResult<PipelineManifest> {
        let cfg = &self.cfg;
        let ev = &cfg.evaluation;
        let (Some(hyp), Some(reference)) = (&ev.hypotheses, &ev.references) else {
            return Err(CliError::Config("evaluation.hypotheses and evaluation.references are required".into()));
        };
        let mut rec = StageRecord::new(&cfg.out_dir, Stage::Evaluate);
        let hyps = lines("hypotheses", &rec.read_external("hypotheses", hyp)?)?;
        let refs = lines("references", &rec.read_external("references", reference)?)?;
        let sources = ev
            .sources
            .as_ref()
            .map(|p| rec.read_external("sources", p).and_then(|b| lines("sources", &b)))
            .transpose()?;
        let comet = ev
            .comet
            .as_ref()
            .map(|e| HttpMetricScorer::new(e.clone(), "comet"))
            .transpose()?;
        let scores = evaluate_corpus(
            &hyps,
            &refs,
            sources.as_deref(),
            &ev.metrics,
            BleuConfig {
                max_n: ev.bleu_max_n,
                smooth: ev.bleu_smooth,
            },
            ChrfConfig {
                char_n: ev.chrf_char_n,
                beta: ev.chrf_beta,
            },
            comet.as_ref().map(|c| c as &dyn ExternalScorer),
        )?;
        rec.write_json(
            a::SCORES,
            &json!({
                "segments": hyps.len(),
                "scores": scores,
                "bleu_scale": "0-1",
                "chrf_scale": "0-100",
            }),
        )?;
        rec.param("bleu_max_n", ev.bleu_max_n);
        rec.param("bleu_smooth", ev.bleu_smooth);
        rec.param("chrf_char_n", ev.chrf_char_n);
        rec.param("chrf_beta", ev.chrf_beta);
        rec.finish(hyps.len(), scores.len())
    }

    fn score_mqm(&self) -> CliResult<PipelineManifest> {
        let cfg = &self.cfg;
        let mut rec = StageRecord::new(&cfg.out_dir, Stage::ScoreMqm);
        let (origin, bytes) = match &cfg.evaluation.mqm_annotations {
            Some(p) => (p.display().to_string(), rec.read_external("mqm_annotations", p)?),
            None => {
                let j = cfg.mqm_journal_path();
                if !j.is_file() {
                    return Err(CliError::Config(
                        "evaluation.mqm_annotations is not set and no MQM journal exists".into(),
                    ));
                }
                (j.display().to_string(), rec.read_external("mqm_journal", &j)?)
            }
        };
        let text = String::from_utf8(bytes).map_err(|_| Error::Data(format!("{origin} is not UTF-8")))?;
        let evals = parse_evaluations_jsonl(&origin, &text)?;
        let summary = evaluation_summary(
            &evals,
            SummaryConfig {
                da_threshold: cfg.evaluation.da_threshold,
            },
        )?;
        rec.write_json(a::MQM_SUMMARY, &summary)?;
        rec.write(a::MQM_BUBBLE, bubble_csv(&export_bubble_data(&evals)?).as_bytes())?;
        rec.write(a::MQM_ERRORS, error_table_markdown(&summary).as_bytes())?;
        rec.param("da_threshold", cfg.evaluation.da_threshold);
        rec.count("systems", summary.systems.len());
        rec.finish(evals.len(), summary.systems.len())
    }
}

/// Applies the configured prompt template and request params on top of the
/// requests built by the preference-pair builder.
struct RequestOverrides<'a> {
    inner: &'a dyn SimplificationClient,
    template: Option<String>,
    params: BTreeMap<String, String>,
}

impl SimplificationClient for RequestOverrides<'_> {
    fn name(&self) -> String {
        self.inner.name()
    }

    fn simplify(&self, id: &str, request: &crisismine_core::dataset::SimplificationRequest) -> crisismine_core::Result<String> {
        if self.template.is_none() && self.params.is_empty() {
            return self.inner.simplify(id, request);
        }
        let mut req = request.clone();
        if let Some(t) = &self.template {
            req.prompt_template = t.clone();
        }
        req.params.extend(self.params.clone());
        self.inner.simplify(id, &req)
    }
}

/// Loads an embedding file for ad-hoc commands.
pub fn load_vectors(path: &Path) -> CliResult<EmbeddingMatrix> {
    Ok(vecfile::read_vectors(path)?)
}
