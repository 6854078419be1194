use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crisismine::tools::{self, ReportFormat};
use crisismine::{CliError, CliResult, Pipeline, PipelineConfig, Stage, StageOutcome};
use crisismine_core::corpus::Side;
use crisismine_core::mteval::{BleuConfig, ChrfConfig, Metric};

#[derive(Parser)]
#[command(name = "crisismine", version, about = "Crisis-domain corpus mining, dataset building and MT evaluation")]
struct Cli {
    /// Pipeline configuration (TOML).
    #[arg(long, short, global = true, default_value = "crisismine.toml")]
    config: PathBuf,
    /// Worker threads for parallel stages.
    #[arg(long, short, global = true)]
    jobs: Option<usize>,
    /// Overrides `out_dir` from the config.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Runs every non-interactive stage in order.
    Run,
    /// Runs a single stage.
    Stage {
        /// clean, embed, cluster, retrieve, partition, sample, serve_annotation,
        /// import_labels, threshold, build_sft, build_dpo, readability,
        /// evaluate, score_mqm or report
        name: String,
    },
    /// Clusters the reference embeddings and ranks the general corpus.
    Retrieve {
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        top_k: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Serves the annotation API until Ctrl-C.
    ServeAnnotation {
        #[arg(long)]
        bind: Option<String>,
    },
    /// Verifies the manifest chain and writes report.md / report.json.
    Report,
    /// Readability indices for one side of a corpus file.
    Readability {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value = "target")]
        side: Side,
        /// json or csv
        #[arg(long, default_value = "json")]
        report: String,
    },
    /// Corpus BLEU and chrF of a hypothesis file against a reference file.
    Evaluate {
        #[arg(long)]
        hyp: PathBuf,
        #[arg(long = "ref")]
        reference: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "bleu,chrf")]
        metrics: Vec<String>,
    },
    /// Summarises MQM/DA annotations.
    ScoreMqm {
        #[arg(long)]
        annotations: PathBuf,
        /// json, csv (bubble chart data) or md (error table)
        #[arg(long, default_value = "json")]
        report: String,
        #[arg(long, default_value_t = 75.0)]
        da_threshold: f64,
    },
}

fn load(cli: &Cli) -> CliResult<PipelineConfig> {
    let mut cfg = PipelineConfig::load(&cli.config)?;
    if let Some(o) = &cli.out_dir {
        cfg.out_dir = o.clone();
    }
    if cli.jobs.is_some() {
        cfg.jobs = cli.jobs;
    }
    Ok(cfg)
}

fn summarize(stage: Stage, outcome: &StageOutcome) {
    match outcome {
        StageOutcome::Ran(m) => {
            eprintln!("{stage:<16} {:>8} -> {:<8} {}", m.input_count, m.output_count, &m.content_digest[..12]);
            for w in &m.warnings {
                eprintln!("{:<16} warning: {w}", "");
            }
        }
        StageOutcome::Skipped(why) => eprintln!("{stage:<16} skipped: {why}"),
    }
}

fn metric(s: &str) -> CliResult<Metric> {
    match s.trim() {
        "bleu" => Ok(Metric::Bleu),
        "chrf" => Ok(Metric::Chrf),
        "comet" => Err(CliError::Config("comet needs a scorer endpoint; use the evaluate stage".into())),
        other => Err(CliError::Config(format!("unknown metric `{other}`"))),
    }
}

fn dispatch(cli: Cli) -> CliResult<()> {
    match &cli.command {
        Command::Run => {
            let p = Pipeline::new(load(&cli)?)?;
            for (stage, outcome) in p.run_all()? {
                summarize(stage, &outcome);
            }
        }
        Command::Stage { name } => {
            let stage: Stage = name.parse()?;
            let p = Pipeline::new(load(&cli)?)?;
            let m = p.run_stage(stage)?;
            summarize(stage, &StageOutcome::Ran(m));
        }
        Command::Retrieve { k, top_k, seed } => {
            let mut cfg = load(&cli)?;
            if let Some(k) = k {
                cfg.retrieval.k = *k;
            }
            if let Some(t) = top_k {
                cfg.retrieval.top_k = *t;
            }
            if let Some(s) = seed {
                cfg.retrieval.seed = *s;
            }
            let p = Pipeline::new(cfg)?;
            for stage in [Stage::Cluster, Stage::Retrieve] {
                let m = p.run_stage(stage)?;
                summarize(stage, &StageOutcome::Ran(m));
            }
        }
        Command::ServeAnnotation { bind } => {
            let mut cfg = load(&cli)?;
            if let Some(b) = bind {
                cfg.annotation.bind = b.clone();
            }
            let p = Pipeline::new(cfg)?;
            let m = p.serve_annotation(|addr| eprintln!("annotation service on http://{addr} (Ctrl-C to stop)"))?;
            summarize(Stage::ServeAnnotation, &StageOutcome::Ran(m));
        }
        Command::Report => {
            let out_dir = match &cli.out_dir {
                Some(o) => o.clone(),
                None => load(&cli)?.out_dir,
            };
            let m = crisismine::report::run(&out_dir)?;
            summarize(Stage::Report, &StageOutcome::Ran(m));
            println!("{}", out_dir.join("report.md").display());
        }
        Command::Readability { input, side, report } => {
            print!("{}", tools::readability(input, *side, report.parse::<ReportFormat>()?)?);
        }
        Command::Evaluate { hyp, reference, metrics } => {
            let metrics = metrics.iter().map(|m| metric(m)).collect::<CliResult<Vec<_>>>()?;
            print!(
                "{}",
                tools::evaluate(hyp, reference, &metrics, BleuConfig::default(), ChrfConfig::default())?
            );
        }
        Command::ScoreMqm { annotations, report, da_threshold } => {
            print!("{}", tools::score_mqm(annotations, report.parse()?, *da_threshold)?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
