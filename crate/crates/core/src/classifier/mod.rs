//! Multi-label course classifier: TF-IDF features into 16 logistic units
//! (goal 4 frozen at zero), with top-k or threshold decisions.

mod decision;
mod featurizer;
mod format;
mod model;

use std::path::Path;

use thiserror::Error;

use crate::io::{self, IoError};
use crate::labelgen::LabeledCourse;
use crate::labels::{LabelVector, NUM_GOALS};

pub use decision::{decide, DecisionRule};
pub use featurizer::{smooth_idf, tokenize, Featurizer, FeaturizerConfig, FeaturizerError, SparseVec};
pub use format::{decode_model, encode_model, ModelFormatError, FORMAT_VERSION, MAGIC};
pub use model::{
    featurize, sigmoid, train, Example, Hyperparameters, Model, Objective, TrainError, TrainingMeta,
    TrainingTrace,
};

/// Anything that maps course text to 17 per-goal scores in (0, 1).
pub trait Scorer {
    fn scores(&self, text: &str) -> [f64; NUM_GOALS];

    fn predict(&self, text: &str, rule: DecisionRule) -> LabelVector {
        decide(&self.scores(text), rule)
    }
}

#[derive(Debug, Error)]
pub enum ClassifierError {
    #[error(transparent)]
    Featurizer(#[from] FeaturizerError),
    #[error(transparent)]
    Train(#[from] TrainError),
    #[error(transparent)]
    Format(#[from] ModelFormatError),
    #[error(transparent)]
    Io(#[from] IoError),
}

/// A featurizer and the model trained on its columns.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedClassifier {
    pub featurizer: Featurizer,
    pub model: Model,
}

impl TrainedClassifier {
    /// Fits the featurizer on the training split only, then trains.
    pub fn fit(
        train_split: &[LabeledCourse],
        validation_split: &[LabeledCourse],
        featurizer_config: FeaturizerConfig,
        hyper: &Hyperparameters,
    ) -> Result<(Self, TrainingTrace), ClassifierError> {
        let corpus: Vec<&str> = train_split
            .iter()
            .map(|l| l.course.combined_text.as_str())
            .collect();
        let featurizer = Featurizer::fit(&corpus, featurizer_config)?;
        let examples = |split: &[LabeledCourse]| {
            split
                .iter()
                .map(|l| Example {
                    features: featurizer.transform(&l.course.combined_text),
                    labels: l.labels,
                })
                .collect::<Vec<_>>()
        };
        let (train_ex, val_ex) = (examples(train_split), examples(validation_split));
        let (model, trace) = train(featurizer.vocabulary_size(), &train_ex, &val_ex, hyper)?;
        Ok((TrainedClassifier { featurizer, model }, trace))
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        encode_model(&self.featurizer, &self.model)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, ModelFormatError> {
        let (featurizer, model) = decode_model(bytes)?;
        Ok(TrainedClassifier { featurizer, model })
    }

    pub fn save(&self, path: &Path) -> Result<(), ClassifierError> {
        Ok(io::write_atomic(path, &self.to_bytes())?)
    }

    pub fn load(path: &Path) -> Result<Self, ClassifierError> {
        let bytes = std::fs::read(path).map_err(|e| IoError::io(path, e))?;
        Ok(Self::from_bytes(&bytes)?)
    }
}

impl Scorer for TrainedClassifier {
    fn scores(&self, text: &str) -> [f64; NUM_GOALS] {
        predict_scores(&self.model, &self.featurizer, text)
    }
}

/// `sigmoid(w_g . x + b_g)` per goal. Goal 4 always scores exactly 0.5.
pub fn predict_scores(model: &Model, featurizer: &Featurizer, text: &str) -> [f64; NUM_GOALS] {
    model.scores(&featurizer.transform(text))
}
