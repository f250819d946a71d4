//! End-to-end orchestration: ingest, clean, label, split, train, predict,
//! evaluate. A stage is skipped when all of its outputs exist and none is
//! older than any of its inputs. Settings changes are not tracked; use
//! `force` after editing the configuration.

pub mod config;
mod stages;

use std::fmt;
use std::path::{Path, PathBuf};
use std::time::SystemTime;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::eval::MetricsReport;
use crate::io::{read_json, sha256_hex, write_json};

pub use config::{is_url, BackendKind, PipelineConfig, PipelineFile};
pub use stages::{
    clean_stage, compare_stage, evaluate_stage, ingest_stage, label_stage, make_backend, open_source,
    predict_stage, split_stage, train_stage, LabelPaths, LabelSummary, MissingPredictionError, Prediction,
    SplitSummary, WorkLayout, DEGREE_HISTOGRAM_ROWS,
};

pub type BoxError = Box<dyn std::error::Error + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Ingest,
    Clean,
    Label,
    Split,
    Train,
    Predict,
    Evaluate,
}

impl Stage {
    pub const ALL: [Stage; 7] = [
        Stage::Ingest,
        Stage::Clean,
        Stage::Label,
        Stage::Split,
        Stage::Train,
        Stage::Predict,
        Stage::Evaluate,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Ingest => "ingest",
            Stage::Clean => "clean",
            Stage::Label => "label",
            Stage::Split => "split",
            Stage::Train => "train",
            Stage::Predict => "predict",
            Stage::Evaluate => "evaluate",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{stage} stage failed: {source}")]
    Stage {
        stage: Stage,
        #[source]
        source: BoxError,
    },
}

impl PipelineError {
    pub fn stage(stage: Stage, source: impl Into<BoxError>) -> Self {
        PipelineError::Stage {
            stage,
            source: source.into(),
        }
    }

    /// 2 for configuration problems, 3 for a failed stage.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Config(_) => 2,
            PipelineError::Stage { .. } => 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileHash {
    pub path: String,
    pub sha256: String,
}

/// One stage's primary artifact. A directory artifact is hashed over its
/// listed files.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub stage: Stage,
    pub path: String,
    pub sha256: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub files: Vec<FileHash>,
}

/// Paths are relative to the work directory and there are no timestamps, so
/// identical runs give byte-identical manifests.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub artifacts: Vec<ManifestEntry>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StageStatus {
    Ran,
    Skipped,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub stages: Vec<(Stage, StageStatus)>,
    pub manifest: Manifest,
    pub report: MetricsReport,
}

fn modified(path: &Path) -> Option<SystemTime> {
    std::fs::metadata(path).and_then(|m| m.modified()).ok()
}

/// Outputs all exist and are at least as new as every input. A missing input
/// makes the stage stale so that running it reports the real error.
pub fn is_up_to_date(inputs: &[PathBuf], outputs: &[PathBuf]) -> bool {
    let Some(oldest_out) = outputs.iter().map(|p| modified(p)).collect::<Option<Vec<_>>>() else {
        return false;
    };
    let Some(newest_in) = inputs.iter().map(|p| modified(p)).collect::<Option<Vec<_>>>() else {
        return false;
    };
    match (oldest_out.into_iter().min(), newest_in.into_iter().max()) {
        (Some(out), Some(inp)) => out >= inp,
        (Some(_), None) => true,
        (None, _) => false,
    }
}

fn relative(root: &Path, path: &Path) -> String {
    let rel = path.strip_prefix(root).unwrap_or(path);
    rel.components()
        .map(|c| c.as_os_str().to_string_lossy())
        .collect::<Vec<_>>()
        .join("/")
}

fn file_hash(root: &Path, path: &Path) -> Result<FileHash, BoxError> {
    Ok(FileHash {
        path: relative(root, path),
        sha256: stages::sha256_path(path)?,
    })
}

fn build_manifest(layout: &WorkLayout) -> Result<Manifest, BoxError> {
    let root = &layout.root;
    let single = |stage: Stage, path: PathBuf| -> Result<ManifestEntry, BoxError> {
        let h = file_hash(root, &path)?;
        Ok(ManifestEntry {
            stage,
            path: h.path,
            sha256: h.sha256,
            files: Vec::new(),
        })
    };
    let split_files = [layout.train(), layout.val(), layout.test()]
        .iter()
        .map(|p| file_hash(root, p))
        .collect::<Result<Vec<_>, _>>()?;
    let combined: String = split_files
        .iter()
        .map(|f| format!("{}\0{}\n", f.path, f.sha256))
        .collect();
    Ok(Manifest {
        artifacts: vec![
            single(Stage::Ingest, layout.raw())?,
            single(Stage::Clean, layout.clean())?,
            single(Stage::Label, layout.labeled())?,
            ManifestEntry {
                stage: Stage::Split,
                path: relative(root, &layout.splits()),
                sha256: sha256_hex(combined.as_bytes()),
                files: split_files,
            },
            single(Stage::Train, layout.model())?,
            single(Stage::Predict, layout.preds())?,
            single(Stage::Evaluate, layout.report())?,
        ],
    })
}

/// Runs every stage in order, writes `manifest.json` and returns the test
/// report.
pub fn run_pipeline(cfg: &PipelineConfig, force: bool) -> Result<RunSummary, PipelineError> {
    if cfg.catalog.is_empty() {
        return Err(PipelineError::Config("no catalog source configured".into()));
    }
    let layout = WorkLayout::new(&cfg.work_dir);
    std::fs::create_dir_all(&layout.root)
        .map_err(|e| PipelineError::Config(format!("cannot create {}: {e}", layout.root.display())))?;
    let mut statuses = Vec::new();

    let mut step = |stage: Stage,
                    inputs: Vec<PathBuf>,
                    outputs: Vec<PathBuf>,
                    run: &dyn Fn() -> Result<(), BoxError>|
     -> Result<(), PipelineError> {
        if !force && is_up_to_date(&inputs, &outputs) {
            log::info!("{stage}: up to date, skipped");
            statuses.push((stage, StageStatus::Skipped));
            return Ok(());
        }
        log::info!("{stage}: running");
        run().map_err(|e| PipelineError::stage(stage, e))?;
        statuses.push((stage, StageStatus::Ran));
        Ok(())
    };

    let catalog_inputs = if is_url(&cfg.catalog) {
        Vec::new()
    } else {
        vec![PathBuf::from(&cfg.catalog)]
    };
    step(Stage::Ingest, catalog_inputs, vec![layout.raw()], &|| {
        let log = ingest_stage(&cfg.catalog, &cfg.api, cfg.filter.years(), &layout.raw())?;
        log::info!("ingest: {} records over {} page(s)", log.total_kept(), log.pages.len());
        Ok(())
    })?;

    step(
        Stage::Clean,
        vec![layout.raw()],
        vec![layout.clean(), layout.clean_stats(), layout.degrees()],
        &|| {
            let stats = clean_stage(
                &layout.raw(),
                &layout.clean(),
                &layout.clean_stats(),
                &layout.degrees(),
                &cfg.filter,
            )?;
            log::info!("clean: kept {} of {}", stats.retained, stats.input);
            Ok(())
        },
    )?;

    let mut label_inputs = vec![layout.clean()];
    label_inputs.extend(cfg.corrections.iter().cloned());
    step(
        Stage::Label,
        label_inputs,
        vec![layout.labeled(), layout.review_queue()],
        &|| {
            let backend = make_backend(cfg);
            let paths = LabelPaths {
                input: &layout.clean(),
                out: &layout.labeled(),
                review_queue: &layout.review_queue(),
                responses_dir: &layout.responses(),
                corrections: cfg.corrections.as_deref(),
            };
            let s = label_stage(&paths, backend.as_ref(), &cfg.llm, &cfg.generation)?;
            log::info!("label: {} labeled, {} awaiting review", s.total, s.needs_review);
            Ok(())
        },
    )?;

    step(
        Stage::Split,
        vec![layout.labeled()],
        vec![layout.train(), layout.val(), layout.test(), layout.distribution()],
        &|| {
            let s = split_stage(&layout.labeled(), &layout.splits(), &cfg.split)?;
            log::info!("split: {}/{}/{}", s.train, s.validation, s.test);
            Ok(())
        },
    )?;

    step(
        Stage::Train,
        vec![layout.train(), layout.val()],
        vec![layout.model()],
        &|| {
            let meta = train_stage(&layout.train(), &layout.val(), cfg.featurizer.clone(), &cfg.hyper, &layout.model())?;
            log::info!("train: final loss {:.6}", meta.final_loss);
            Ok(())
        },
    )?;

    step(
        Stage::Predict,
        vec![layout.model(), layout.test()],
        vec![layout.preds()],
        &|| {
            predict_stage(&layout.model(), &layout.test(), cfg.rule, &layout.preds())?;
            Ok(())
        },
    )?;

    step(
        Stage::Evaluate,
        vec![layout.preds(), layout.test()],
        vec![layout.report(), layout.per_goal()],
        &|| {
            let r = evaluate_stage(
                &layout.preds(),
                &layout.test(),
                &cfg.model_name,
                &layout.report(),
                Some(&layout.per_goal()),
            )?;
            log::info!("evaluate: micro-F1 {:.4}", r.micro_f1);
            Ok(())
        },
    )?;

    let manifest = build_manifest(&layout).map_err(|e| PipelineError::stage(Stage::Evaluate, e))?;
    write_json(&layout.manifest(), &manifest).map_err(|e| PipelineError::stage(Stage::Evaluate, e))?;
    let report: MetricsReport =
        read_json(&layout.report()).map_err(|e| PipelineError::stage(Stage::Evaluate, e))?;
    Ok(RunSummary {
        stages: statuses,
        manifest,
        report,
    })
}
