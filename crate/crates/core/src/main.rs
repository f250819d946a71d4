use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use sdg_core::classifier::DecisionRule;
use sdg_core::dataset::{distribution_csv, label_distribution};
use sdg_core::eval::MetricsReport;
use sdg_core::ingest::YearRange;
use sdg_core::io::{read_json, read_jsonl, write_atomic};
use sdg_core::labelgen::LabeledCourse;
use sdg_core::pipeline::{
    self, BackendKind, BoxError, LabelPaths, PipelineConfig, PipelineError, PipelineFile, Stage, StageStatus,
};

#[derive(Parser)]
#[command(name = "sdg", version, about = "Label courses with UN SDGs and train a classifier")]
struct Cli {
    /// TOML settings file. Command-line flags take precedence over it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides both the split and training seeds.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Rerun stages even when their outputs look up to date.
    #[arg(long, global = true)]
    force: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Download the course catalog into a raw JSONL store.
    Ingest(IngestArgs),
    /// Filter by year, length and language; drop duplicates.
    Clean(CleanArgs),
    /// Attach goal labels from a language model or the keyword oracle.
    Label(LabelArgs),
    /// Shuffle labeled courses into train, validation and test files.
    Split(SplitArgs),
    /// Fit the classifier.
    Train(TrainArgs),
    /// Score courses with a trained model.
    Predict(PredictArgs),
    /// Compare predictions with gold labels.
    Evaluate(EvaluateArgs),
    /// Rank several evaluation reports.
    Compare(CompareArgs),
    /// Print the per-goal table of a report or the label distribution of a dataset.
    Report(ReportArgs),
    /// Run every stage, skipping those that are up to date.
    Run(RunArgs),
}

#[derive(Args)]
struct IngestArgs {
    /// Catalog API base URL, or a local JSONL record file.
    #[arg(long)]
    base_url: Option<String>,
    /// Academic years, e.g. 2021..2023.
    #[arg(long)]
    years: Option<YearRange>,
    #[arg(long)]
    page_size: Option<usize>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct CleanArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Filter counts (default: next to --out).
    #[arg(long)]
    stats: Option<PathBuf>,
    /// Degree histogram CSV (default: next to --out).
    #[arg(long)]
    degrees: Option<PathBuf>,
    #[arg(long)]
    years: Option<YearRange>,
    #[arg(long)]
    min_chars: Option<usize>,
    #[arg(long)]
    max_chars: Option<usize>,
}

#[derive(Args)]
struct LabelArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// oracle or live.
    #[arg(long)]
    backend: Option<BackendKind>,
    /// Completion endpoint for the live backend.
    #[arg(long)]
    endpoint: Option<String>,
    #[arg(long)]
    temperature: Option<f64>,
    #[arg(long)]
    token_limit: Option<u32>,
    #[arg(long)]
    max_labels: Option<usize>,
    /// JSONL overlay of hand-checked labels.
    #[arg(long)]
    corrections: Option<PathBuf>,
    /// Raw response archive directory (default: `responses/` next to --out).
    #[arg(long)]
    responses: Option<PathBuf>,
    /// Courses without usable labels (default: next to --out).
    #[arg(long)]
    review_queue: Option<PathBuf>,
}

#[derive(Args)]
struct SplitArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    train: PathBuf,
    #[arg(long)]
    val: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    epochs: Option<u32>,
    #[arg(long)]
    l2: Option<f64>,
}

#[derive(Args)]
struct PredictArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// top<k> or threshold:<t>.
    #[arg(long)]
    rule: Option<DecisionRule>,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    pred: PathBuf,
    #[arg(long)]
    gold: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Model name recorded in the report.
    #[arg(long)]
    name: Option<String>,
    /// Also write the per-goal F1 table as CSV.
    #[arg(long)]
    per_goal: Option<PathBuf>,
}

#[derive(Args)]
struct CompareArgs {
    /// Report JSON files written by `evaluate`.
    #[arg(long, num_args = 1.., required = true)]
    reports: Vec<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ReportArgs {
    /// A report JSON file (per-goal table) or a labeled JSONL file (distribution).
    input: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    /// Catalog API base URL, or a local JSONL record file.
    #[arg(long)]
    catalog: Option<String>,
    #[arg(long)]
    work_dir: Option<PathBuf>,
}

enum CliError {
    Config(String),
    Failed(String, BoxError),
}

impl From<PipelineError> for CliError {
    fn from(e: PipelineError) -> Self {
        match e {
            PipelineError::Config(m) => CliError::Config(m),
            PipelineError::Stage { stage, source } => CliError::Failed(stage.to_string(), source),
        }
    }
}

fn failed(what: Stage) -> impl FnOnce(BoxError) -> CliError {
    move |e| CliError::Failed(what.to_string(), e)
}

fn sibling(out: &Path, suffix: &str) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    out.with_file_name(format!("{stem}{suffix}"))
}

fn settings(cli: &Cli) -> Result<PipelineFile, CliError> {
    let mut file = match &cli.config {
        Some(p) => PipelineFile::load(p)?,
        None => PipelineFile::default(),
    };
    if cli.seed.is_some() {
        file.seed = cli.seed;
    }
    Ok(file)
}

fn resolve(file: &PipelineFile) -> Result<PipelineConfig, CliError> {
    Ok(file.resolve()?)
}

fn set_years(file: &mut PipelineFile, years: Option<YearRange>) {
    if let Some(y) = years {
        file.filter.year_min = y.start;
        file.filter.year_max = y.end;
    }
}

fn execute(cli: &Cli) -> Result<(), CliError> {
    let mut file = settings(cli)?;
    match &cli.command {
        Command::Ingest(a) => {
            if let Some(u) = &a.base_url {
                file.paths.catalog = u.clone();
            }
            set_years(&mut file, a.years);
            if let Some(n) = a.page_size {
                file.api.page_size = n;
            }
            let cfg = resolve(&file)?;
            if cfg.catalog.is_empty() {
                return Err(CliError::Config("--base-url or paths.catalog is required".into()));
            }
            let log = pipeline::ingest_stage(&cfg.catalog, &cfg.api, cfg.filter.years(), &a.out)
                .map_err(failed(Stage::Ingest))?;
            println!("ingested {} record(s) from {} page(s)", log.total_kept(), log.pages.len());
        }
        Command::Clean(a) => {
            set_years(&mut file, a.years);
            if let Some(n) = a.min_chars {
                file.filter.min_chars = n;
            }
            if let Some(n) = a.max_chars {
                file.filter.max_chars = n;
            }
            let cfg = resolve(&file)?;
            let stats_path = a.stats.clone().unwrap_or_else(|| sibling(&a.out, ".stats.json"));
            let degrees_path = a.degrees.clone().unwrap_or_else(|| sibling(&a.out, ".degrees.csv"));
            let s = pipeline::clean_stage(&a.input, &a.out, &stats_path, &degrees_path, &cfg.filter)
                .map_err(failed(Stage::Clean))?;
            println!(
                "kept {} of {} (missing {}, year {}, length {}, language {}, duplicate {})",
                s.retained, s.input, s.missing_fields, s.year, s.length, s.language, s.duplicate
            );
        }
        Command::Label(a) => {
            if let Some(b) = a.backend {
                file.label.backend = b;
            }
            if let Some(e) = &a.endpoint {
                file.label.endpoint = Some(e.clone());
            }
            if let Some(t) = a.temperature {
                file.label.temperature = t;
            }
            if let Some(t) = a.token_limit {
                file.label.token_limit = t;
            }
            if let Some(m) = a.max_labels {
                file.label.max_labels = m;
            }
            if let Some(c) = &a.corrections {
                file.paths.corrections = Some(c.clone());
            }
            let cfg = resolve(&file)?;
            let responses = a
                .responses
                .clone()
                .unwrap_or_else(|| a.out.with_file_name("responses"));
            let review = a.review_queue.clone().unwrap_or_else(|| sibling(&a.out, ".review.jsonl"));
            let backend = pipeline::make_backend(&cfg);
            let paths = LabelPaths {
                input: &a.input,
                out: &a.out,
                review_queue: &review,
                responses_dir: &responses,
                corrections: cfg.corrections.as_deref(),
            };
            let s = pipeline::label_stage(&paths, backend.as_ref(), &cfg.llm, &cfg.generation)
                .map_err(failed(Stage::Label))?;
            println!(
                "labeled {} course(s); {} corrected, {} awaiting review",
                s.total, s.corrected, s.needs_review
            );
        }
        Command::Split(a) => {
            let cfg = resolve(&file)?;
            let s = pipeline::split_stage(&a.input, &a.out_dir, &cfg.split).map_err(failed(Stage::Split))?;
            println!(
                "train {}, validation {}, test {} ({} excluded)",
                s.train, s.validation, s.test, s.excluded
            );
        }
        Command::Train(a) => {
            if let Some(v) = a.lr {
                file.train.learning_rate = v;
            }
            if let Some(v) = a.epochs {
                file.train.epochs = v;
            }
            if let Some(v) = a.l2 {
                file.train.l2 = v;
            }
            let cfg = resolve(&file)?;
            let meta = pipeline::train_stage(&a.train, &a.val, cfg.featurizer, &cfg.hyper, &a.out)
                .map_err(failed(Stage::Train))?;
            let best = meta.validation_micro_f1.last().copied().unwrap_or(0.0);
            println!("trained {} epochs; final loss {:.6}, validation micro-F1 {best:.4}", meta.epochs, meta.final_loss);
        }
        Command::Predict(a) => {
            if let Some(r) = a.rule {
                file.decision.rule = r.to_string();
            }
            let cfg = resolve(&file)?;
            let n = pipeline::predict_stage(&a.model, &a.input, cfg.rule, &a.out).map_err(failed(Stage::Predict))?;
            println!("wrote {n} prediction(s)");
        }
        Command::Evaluate(a) => {
            if let Some(n) = &a.name {
                file.evaluate.model_name = n.clone();
            }
            let cfg = resolve(&file)?;
            let r = pipeline::evaluate_stage(&a.pred, &a.gold, &cfg.model_name, &a.out, a.per_goal.as_deref())
                .map_err(failed(Stage::Evaluate))?;
            println!(
                "precision {:.3}, recall {:.3}, F1 {:.3}",
                r.micro_precision, r.micro_recall, r.micro_f1
            );
        }
        Command::Compare(a) => {
            let c = pipeline::compare_stage(&a.reports, a.out.as_deref())
                .map_err(|e| CliError::Failed("compare".into(), e))?;
            print!("{}", c.to_csv());
        }
        Command::Report(a) => {
            let text = render_report(&a.input).map_err(|e| CliError::Failed("report".into(), e))?;
            match &a.out {
                Some(out) => write_atomic(out, text.as_bytes()).map_err(|e| CliError::Failed("report".into(), e.into()))?,
                None => print!("{text}"),
            }
        }
        Command::Run(a) => {
            if let Some(c) = &a.catalog {
                file.paths.catalog = c.clone();
            }
            if let Some(w) = &a.work_dir {
                file.paths.work_dir = w.clone();
            }
            let cfg = resolve(&file)?;
            let summary = pipeline::run_pipeline(&cfg, cli.force)?;
            for (stage, status) in &summary.stages {
                let s = match status {
                    StageStatus::Ran => "ran",
                    StageStatus::Skipped => "skipped",
                };
                println!("{stage:<9} {s}");
            }
            let r = &summary.report;
            println!(
                "test precision {:.3}, recall {:.3}, F1 {:.3}",
                r.micro_precision, r.micro_recall, r.micro_f1
            );
        }
    }
    Ok(())
}

/// Per-goal CSV for a report, goal distribution CSV for labeled JSONL.
fn render_report(input: &Path) -> Result<String, BoxError> {
    if input.extension().is_some_and(|e| e == "json") {
        let report: MetricsReport = read_json(input)?;
        Ok(report.per_goal_csv())
    } else {
        let data: Vec<LabeledCourse> = read_jsonl(input)?;
        Ok(distribution_csv(&label_distribution(&data)))
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Config(m)) => {
            eprintln!("error: configuration: {m}");
            ExitCode::from(2)
        }
        Err(CliError::Failed(what, e)) => {
            eprintln!("error: {what} stage failed: {e}");
            let mut source = e.source();
            while let Some(s) = source {
                eprintln!("  caused by: {s}");
                source = s.source();
            }
            ExitCode::from(3)
        }
    }
}
