//! TOML pipeline configuration. Every section and key is optional; missing
//! values take the defaults below.

use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::classifier::{DecisionRule, FeaturizerConfig, Hyperparameters};
use crate::dataset::SplitConfig;
use crate::ingest::{ApiConfig, API_TOKEN_ENV};
use crate::labelgen::{GenerationOptions, LlmParams, DEFAULT_MAX_LABELS, LLM_TOKEN_ENV};
use crate::preprocess::{FilterConfig, Language};

use super::PipelineError;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineFile {
    pub seed: Option<u64>,
    pub paths: PathsSection,
    pub api: ApiSection,
    pub filter: FilterSection,
    pub label: LabelSection,
    pub split: SplitSection,
    pub train: TrainSection,
    pub decision: DecisionSection,
    pub evaluate: EvaluateSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathsSection {
    pub work_dir: PathBuf,
    /// `http(s)://` catalog API base URL, or a local JSONL record file.
    pub catalog: String,
    pub corrections: Option<PathBuf>,
}

impl Default for PathsSection {
    fn default() -> Self {
        PathsSection {
            work_dir: PathBuf::from("work"),
            catalog: String::new(),
            corrections: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ApiSection {
    pub page_size: usize,
    pub max_retries: u32,
    pub backoff_ms: u64,
    pub max_in_flight: usize,
    pub timeout_ms: u64,
}

impl Default for ApiSection {
    fn default() -> Self {
        let d = ApiConfig::default();
        ApiSection {
            page_size: d.page_size,
            max_retries: d.max_retries,
            backoff_ms: d.backoff_base.as_millis() as u64,
            max_in_flight: d.max_in_flight,
            timeout_ms: d.timeout.as_millis() as u64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FilterSection {
    pub year_min: u16,
    pub year_max: u16,
    pub min_chars: usize,
    pub max_chars: usize,
    pub language: Language,
}

impl Default for FilterSection {
    fn default() -> Self {
        let d = FilterConfig::default();
        FilterSection {
            year_min: d.year_min,
            year_max: d.year_max,
            min_chars: d.min_combined_chars,
            max_chars: d.max_combined_chars,
            language: d.required_language,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    Oracle,
    Live,
}

impl std::str::FromStr for BackendKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "oracle" => Ok(BackendKind::Oracle),
            "live" => Ok(BackendKind::Live),
            other => Err(format!("unknown backend {other:?} (expected oracle or live)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LabelSection {
    pub backend: BackendKind,
    pub temperature: f64,
    pub token_limit: u32,
    pub model_name: String,
    pub max_labels: usize,
    pub max_retries: u32,
    pub retry_delay_ms: u64,
    pub max_in_flight: usize,
    pub endpoint: Option<String>,
    pub response_path: String,
    pub timeout_ms: u64,
}

impl Default for LabelSection {
    fn default() -> Self {
        let p = LlmParams::default();
        let g = GenerationOptions::default();
        LabelSection {
            backend: BackendKind::Oracle,
            temperature: p.temperature,
            token_limit: p.token_limit,
            model_name: p.model_name,
            max_labels: DEFAULT_MAX_LABELS,
            max_retries: g.max_retries,
            retry_delay_ms: g.retry_delay.as_millis() as u64,
            max_in_flight: g.max_in_flight,
            endpoint: None,
            response_path: "predictions.0.content".into(),
            timeout_ms: 60_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitSection {
    pub ratios: [f64; 3],
    pub seed: u64,
}

impl Default for SplitSection {
    fn default() -> Self {
        let d = SplitConfig::default();
        SplitSection {
            ratios: d.ratios,
            seed: d.seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSection {
    pub learning_rate: f64,
    pub epochs: u32,
    pub l2: f64,
    pub seed: u64,
    pub min_df: usize,
    pub bigrams: bool,
}

impl Default for TrainSection {
    fn default() -> Self {
        let h = Hyperparameters::default();
        let f = FeaturizerConfig::default();
        TrainSection {
            learning_rate: h.learning_rate,
            epochs: h.epochs,
            l2: h.l2,
            seed: h.seed,
            min_df: f.min_df,
            bigrams: f.bigrams,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DecisionSection {
    pub rule: String,
}

impl Default for DecisionSection {
    fn default() -> Self {
        DecisionSection {
            rule: DecisionRule::default().to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluateSection {
    pub model_name: String,
}

impl Default for EvaluateSection {
    fn default() -> Self {
        EvaluateSection {
            model_name: "tfidf-logreg".into(),
        }
    }
}

/// Resolved, validated settings for a pipeline run.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub work_dir: PathBuf,
    pub catalog: String,
    pub corrections: Option<PathBuf>,
    pub api: ApiConfig,
    pub filter: FilterConfig,
    pub backend: BackendKind,
    pub llm: LlmParams,
    pub generation: GenerationOptions,
    pub live_endpoint: Option<String>,
    pub live_response_path: String,
    pub live_timeout: Duration,
    pub live_token: Option<String>,
    pub split: SplitConfig,
    pub featurizer: FeaturizerConfig,
    pub hyper: Hyperparameters,
    pub rule: DecisionRule,
    pub model_name: String,
}

impl PipelineFile {
    pub fn parse(text: &str) -> Result<Self, PipelineError> {
        toml::from_str(text).map_err(|e| PipelineError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))?;
        let mut file = Self::parse(&text)?;
        file.rebase(path.parent().unwrap_or(Path::new("")));
        Ok(file)
    }

    /// Makes relative paths relative to `base` (the config file's directory).
    fn rebase(&mut self, base: &Path) {
        let fix = |p: &Path| {
            if p.is_relative() {
                base.join(p)
            } else {
                p.to_path_buf()
            }
        };
        self.paths.work_dir = fix(&self.paths.work_dir);
        if let Some(c) = &self.paths.corrections {
            self.paths.corrections = Some(fix(c));
        }
        let catalog = &self.paths.catalog;
        if !catalog.is_empty() && !is_url(catalog) {
            let local = catalog.strip_prefix("file://").unwrap_or(catalog);
            self.paths.catalog = fix(Path::new(local)).to_string_lossy().into_owned();
        }
    }

    /// Validates and resolves. Secrets come from the environment; a global
    /// `seed` overrides the split and training seeds.
    pub fn resolve(&self) -> Result<PipelineConfig, PipelineError> {
        let cfg_err = |m: String| PipelineError::Config(m);
        let api = ApiConfig {
            base_url: self.paths.catalog.clone(),
            page_size: self.api.page_size,
            max_retries: self.api.max_retries,
            backoff_base: Duration::from_millis(self.api.backoff_ms),
            auth_token: std::env::var(API_TOKEN_ENV).ok(),
            max_in_flight: self.api.max_in_flight,
            timeout: Duration::from_millis(self.api.timeout_ms),
        };
        api.validate().map_err(|e| cfg_err(e.to_string()))?;
        let filter = FilterConfig {
            year_min: self.filter.year_min,
            year_max: self.filter.year_max,
            min_combined_chars: self.filter.min_chars,
            max_combined_chars: self.filter.max_chars,
            required_language: self.filter.language,
        };
        filter.validate().map_err(cfg_err)?;
        let llm = LlmParams {
            temperature: self.label.temperature,
            token_limit: self.label.token_limit,
            model_name: self.label.model_name.clone(),
        };
        llm.validate().map_err(cfg_err)?;
        if self.label.max_labels == 0 {
            return Err(cfg_err("label.max_labels must be at least 1".into()));
        }
        if self.label.backend == BackendKind::Live && self.label.endpoint.is_none() {
            return Err(cfg_err("label.endpoint is required for the live backend".into()));
        }
        let split = SplitConfig {
            ratios: self.split.ratios,
            seed: self.seed.unwrap_or(self.split.seed),
        };
        split.validate().map_err(|e| cfg_err(e.to_string()))?;
        let hyper = Hyperparameters {
            learning_rate: self.train.learning_rate,
            epochs: self.train.epochs,
            l2: self.train.l2,
            seed: self.seed.unwrap_or(self.train.seed),
        };
        hyper.validate().map_err(cfg_err)?;
        let rule: DecisionRule = self.decision.rule.parse().map_err(cfg_err)?;
        if let Some(c) = &self.paths.corrections {
            if !c.is_file() {
                return Err(cfg_err(format!("corrections file {} not found", c.display())));
            }
        }
        Ok(PipelineConfig {
            work_dir: self.paths.work_dir.clone(),
            catalog: self.paths.catalog.clone(),
            corrections: self.paths.corrections.clone(),
            api,
            filter,
            backend: self.label.backend,
            llm,
            generation: GenerationOptions {
                max_labels: self.label.max_labels,
                max_retries: self.label.max_retries,
                retry_delay: Duration::from_millis(self.label.retry_delay_ms),
                max_in_flight: self.label.max_in_flight.max(1),
            },
            live_endpoint: self.label.endpoint.clone(),
            live_response_path: self.label.response_path.clone(),
            live_timeout: Duration::from_millis(self.label.timeout_ms),
            live_token: std::env::var(LLM_TOKEN_ENV).ok(),
            split,
            featurizer: FeaturizerConfig {
                min_df: self.train.min_df,
                bigrams: self.train.bigrams,
                ..FeaturizerConfig::default()
            },
            hyper,
            rule,
            model_name: self.evaluate.model_name.clone(),
        })
    }
}

pub fn is_url(s: &str) -> bool {
    s.starts_with("http://") || s.starts_with("https://")
}
