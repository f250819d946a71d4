//! One function per stage. Each reads its inputs from disk and writes its
//! outputs atomically, so the CLI subcommands and `run` share them.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::{is_url, BackendKind, PipelineConfig};
use super::BoxError;
use crate::classifier::{DecisionRule, FeaturizerConfig, Hyperparameters, Scorer, TrainedClassifier, TrainingMeta};
use crate::dataset::{distribution_csv, label_distribution, split_dataset, SplitConfig};
use crate::eval::{compare_models, Comparison, MetricsReport};
use crate::ingest::{
    fetch_courses, log_path_for, write_raw_store, ApiConfig, FileSource, HttpSource, IngestLog, PageSource,
    YearRange,
};
use crate::io::{self, read_json, read_jsonl, write_atomic, write_json, write_jsonl};
use crate::labelgen::{
    apply_corrections, generate_labels, read_corrections, render_response_archive, response_file_name,
    GenerationOptions, KeywordOracle, LabelBackend, LabeledCourse, LiveBackend, LlmParams,
};
use crate::labels::LabelVector;
use crate::preprocess::{clean, degree_distribution, degree_distribution_csv, CleanCourse, FilterConfig, FilterStats};

/// Degrees listed in the cleaning histogram.
pub const DEGREE_HISTOGRAM_ROWS: usize = 10;

/// File names inside a pipeline work directory.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WorkLayout {
    pub root: PathBuf,
}

impl WorkLayout {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        WorkLayout { root: root.into() }
    }

    fn at(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn raw(&self) -> PathBuf {
        self.at("raw.jsonl")
    }
    pub fn clean(&self) -> PathBuf {
        self.at("clean.jsonl")
    }
    pub fn clean_stats(&self) -> PathBuf {
        self.at("clean_stats.json")
    }
    pub fn degrees(&self) -> PathBuf {
        self.at("degrees.csv")
    }
    pub fn labeled(&self) -> PathBuf {
        self.at("labeled.jsonl")
    }
    pub fn review_queue(&self) -> PathBuf {
        self.at("review_queue.jsonl")
    }
    pub fn responses(&self) -> PathBuf {
        self.at("responses")
    }
    pub fn splits(&self) -> PathBuf {
        self.at("splits")
    }
    pub fn train(&self) -> PathBuf {
        self.splits().join("train.jsonl")
    }
    pub fn val(&self) -> PathBuf {
        self.splits().join("val.jsonl")
    }
    pub fn test(&self) -> PathBuf {
        self.splits().join("test.jsonl")
    }
    pub fn distribution(&self) -> PathBuf {
        self.splits().join("distribution.csv")
    }
    pub fn model(&self) -> PathBuf {
        self.at("model.bin")
    }
    pub fn preds(&self) -> PathBuf {
        self.at("preds.jsonl")
    }
    pub fn report(&self) -> PathBuf {
        self.at("report.json")
    }
    pub fn per_goal(&self) -> PathBuf {
        self.at("per_goal.csv")
    }
    pub fn manifest(&self) -> PathBuf {
        self.at("manifest.json")
    }
}

/// Opens an HTTP source for URLs, otherwise a local record file.
pub fn open_source(catalog: &str, api: &ApiConfig) -> Result<Box<dyn PageSource>, BoxError> {
    if is_url(catalog) {
        Ok(Box::new(HttpSource::new(catalog, api.auth_token.clone(), api.timeout)))
    } else {
        let path = catalog.strip_prefix("file://").unwrap_or(catalog);
        Ok(Box::new(FileSource::open(Path::new(path))?))
    }
}

/// Writes the raw store at `out` and its page log next to it.
pub fn ingest_stage(catalog: &str, api: &ApiConfig, years: YearRange, out: &Path) -> Result<IngestLog, BoxError> {
    let source = open_source(catalog, api)?;
    let outcome = fetch_courses(source.as_ref(), api, years)?;
    write_raw_store(out, &outcome.courses)?;
    write_atomic(&log_path_for(out), outcome.log.render().as_bytes())?;
    Ok(outcome.log)
}

pub fn clean_stage(
    input: &Path,
    out: &Path,
    stats_out: &Path,
    degrees_out: &Path,
    filter: &FilterConfig,
) -> Result<FilterStats, BoxError> {
    filter.validate()?;
    let raw = crate::ingest::read_raw_store(input)?;
    let (courses, stats) = clean(&raw, filter);
    write_jsonl(out, &courses)?;
    write_json(stats_out, &stats)?;
    let degrees = degree_distribution(&courses, DEGREE_HISTOGRAM_ROWS);
    write_atomic(degrees_out, degree_distribution_csv(&degrees).as_bytes())?;
    Ok(stats)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct LabelSummary {
    pub total: usize,
    pub corrected: usize,
    pub needs_review: usize,
}

pub fn make_backend(cfg: &PipelineConfig) -> Box<dyn LabelBackend> {
    match cfg.backend {
        BackendKind::Oracle => Box::new(KeywordOracle::shipped(cfg.generation.max_labels)),
        BackendKind::Live => Box::new(LiveBackend::new(
            cfg.live_endpoint.as_deref().unwrap_or_default(),
            cfg.live_token.clone(),
            &cfg.live_response_path,
            cfg.live_timeout,
        )),
    }
}

pub struct LabelPaths<'a> {
    pub input: &'a Path,
    pub out: &'a Path,
    pub review_queue: &'a Path,
    pub responses_dir: &'a Path,
    pub corrections: Option<&'a Path>,
}

/// Labels every clean course, archives the raw responses, applies the
/// corrections overlay and writes the remaining failures to the review queue.
pub fn label_stage(
    paths: &LabelPaths,
    backend: &dyn LabelBackend,
    params: &LlmParams,
    options: &GenerationOptions,
) -> Result<LabelSummary, BoxError> {
    let overlay = match paths.corrections {
        Some(p) => read_corrections(p)?,
        None => Vec::new(),
    };
    let courses: Vec<CleanCourse> = read_jsonl(paths.input)?;
    let outcome = generate_labels(&courses, backend, params, options)?;
    for (course, responses) in courses.iter().zip(&outcome.responses) {
        if !responses.is_empty() {
            let path = paths.responses_dir.join(response_file_name(&course.id));
            write_atomic(&path, render_response_archive(responses).as_bytes())?;
        }
    }
    let labeled = apply_corrections(&outcome.labeled, &overlay)?;
    let queue: Vec<&LabeledCourse> = labeled.iter().filter(|l| l.needs_review).collect();
    write_jsonl(paths.out, &labeled)?;
    write_jsonl(paths.review_queue, &queue)?;
    if !queue.is_empty() {
        log::warn!(
            "{} course(s) have no usable labels; see {}",
            queue.len(),
            paths.review_queue.display()
        );
    }
    Ok(LabelSummary {
        total: labeled.len(),
        corrected: overlay.len(),
        needs_review: queue.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSummary {
    pub train: usize,
    pub validation: usize,
    pub test: usize,
    pub excluded: usize,
}

/// Splits labeled courses into `train.jsonl`, `val.jsonl` and `test.jsonl`
/// under `out_dir`. Courses still awaiting review are left out.
pub fn split_stage(input: &Path, out_dir: &Path, config: &SplitConfig) -> Result<SplitSummary, BoxError> {
    let all: Vec<LabeledCourse> = read_jsonl(input)?;
    let (usable, excluded): (Vec<_>, Vec<_>) = all.into_iter().partition(|l| !l.needs_review);
    if !excluded.is_empty() {
        log::warn!("{} course(s) awaiting review are excluded from the splits", excluded.len());
    }
    let bundle = split_dataset(&usable, config)?;
    write_jsonl(&out_dir.join("train.jsonl"), &bundle.train)?;
    write_jsonl(&out_dir.join("val.jsonl"), &bundle.validation)?;
    write_jsonl(&out_dir.join("test.jsonl"), &bundle.test)?;
    let dist = label_distribution(&usable);
    write_atomic(&out_dir.join("distribution.csv"), distribution_csv(&dist).as_bytes())?;
    Ok(SplitSummary {
        train: bundle.train.len(),
        validation: bundle.validation.len(),
        test: bundle.test.len(),
        excluded: excluded.len(),
    })
}

pub fn train_stage(
    train: &Path,
    val: &Path,
    featurizer: FeaturizerConfig,
    hyper: &Hyperparameters,
    out: &Path,
) -> Result<TrainingMeta, BoxError> {
    let train_split: Vec<LabeledCourse> = read_jsonl(train)?;
    let val_split: Vec<LabeledCourse> = read_jsonl(val)?;
    let (clf, _) = TrainedClassifier::fit(&train_split, &val_split, featurizer, hyper)?;
    clf.save(out)?;
    Ok(clf.model.meta)
}

/// One line of a predictions file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub course_id: String,
    pub scores: Vec<f64>,
    pub labels: LabelVector,
}

/// Scores every course in `input` (clean or labeled records).
pub fn predict_stage(model: &Path, input: &Path, rule: DecisionRule, out: &Path) -> Result<usize, BoxError> {
    rule.validate()?;
    let clf = TrainedClassifier::load(model)?;
    let courses: Vec<CleanCourse> = read_jsonl(input)?;
    let preds: Vec<Prediction> = courses
        .iter()
        .map(|c| {
            let scores = clf.scores(&c.combined_text);
            Prediction {
                course_id: c.id.clone(),
                scores: scores.to_vec(),
                labels: crate::classifier::decide(&scores, rule),
            }
        })
        .collect();
    write_jsonl(out, &preds)?;
    Ok(preds.len())
}

#[derive(Debug, thiserror::Error)]
#[error("no prediction for gold course(s): {}", .0.join(", "))]
pub struct MissingPredictionError(pub Vec<String>);

/// Scores predictions against the gold labels of the same courses. Every gold
/// course must have a prediction; extra predictions are ignored.
pub fn evaluate_stage(
    preds: &Path,
    gold: &Path,
    model_name: &str,
    out: &Path,
    per_goal_out: Option<&Path>,
) -> Result<MetricsReport, BoxError> {
    let predictions: Vec<Prediction> = read_jsonl(preds)?;
    let gold_set: Vec<LabeledCourse> = read_jsonl(gold)?;
    let by_id: HashMap<&str, &Prediction> = predictions.iter().map(|p| (p.course_id.as_str(), p)).collect();
    let mut missing = Vec::new();
    let mut pred_v = Vec::with_capacity(gold_set.len());
    for g in &gold_set {
        match by_id.get(g.course.id.as_str()) {
            Some(p) => pred_v.push(p.labels),
            None => missing.push(g.course.id.clone()),
        }
    }
    if !missing.is_empty() {
        return Err(MissingPredictionError(missing).into());
    }
    let gold_v: Vec<LabelVector> = gold_set.iter().map(|g| g.labels).collect();
    let dataset = gold.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let report = MetricsReport::evaluate(model_name, &dataset, &pred_v, &gold_v)?;
    write_json(out, &report)?;
    if let Some(p) = per_goal_out {
        write_atomic(p, report.per_goal_csv().as_bytes())?;
    }
    Ok(report)
}

pub fn compare_stage(reports: &[PathBuf], out: Option<&Path>) -> Result<Comparison, BoxError> {
    let loaded = reports
        .iter()
        .map(|p| read_json::<MetricsReport>(p))
        .collect::<Result<Vec<_>, _>>()?;
    let comparison = compare_models(&loaded);
    if let Some(out) = out {
        write_atomic(out, comparison.to_csv().as_bytes())?;
    }
    Ok(comparison)
}

pub(crate) fn sha256_path(path: &Path) -> Result<String, BoxError> {
    Ok(io::sha256_file(path)?)
}
