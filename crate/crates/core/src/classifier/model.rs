//! One-vs-rest logistic units trained by full-batch gradient descent.
//!
//! Each selectable goal `g` owns a weight row `w_g` (vocabulary columns plus
//! a trailing bias) and minimizes
//!
//! ```text
//! L_g = mean_d [ softplus(z_dg) - y_dg * z_dg ] + (l2 / 2) * |w_g|^2,   z_dg = w_g . x_d + b_g
//! ```
//!
//! The bias is not regularized. The training objective is the sum of `L_g`
//! over the 16 selectable goals; goal 4's row stays zero.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::decision::{decide, DecisionRule};
use super::featurizer::{Featurizer, SparseVec};
use crate::eval::micro_metrics;
use crate::labels::{LabelVector, EXCLUDED_SLOT, NUM_GOALS};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hyperparameters {
    pub learning_rate: f64,
    pub epochs: u32,
    pub l2: f64,
    pub seed: u64,
}

impl Default for Hyperparameters {
    fn default() -> Self {
        Hyperparameters {
            learning_rate: 0.1,
            epochs: 300,
            l2: 1e-4,
            seed: 7,
        }
    }
}

impl Hyperparameters {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(format!("learning rate must be positive, got {}", self.learning_rate));
        }
        if !(self.l2.is_finite() && self.l2 >= 0.0) {
            return Err(format!("l2 must be non-negative, got {}", self.l2));
        }
        Ok(())
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TrainError {
    #[error("loss became non-finite at epoch {epoch}")]
    Divergence { epoch: u32 },
    #[error("training split is empty")]
    EmptyTrainingSet,
    #[error("invalid hyperparameters: {0}")]
    Hyper(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingMeta {
    pub epochs: u32,
    pub learning_rate: f64,
    pub l2: f64,
    pub seed: u64,
    pub final_loss: f64,
    /// Validation micro-F1 under top-3 after each epoch.
    pub validation_micro_f1: Vec<f64>,
}

/// Dense 17 x (V + 1) weights, row-major, bias in the last column.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    columns: usize,
    weights: Vec<f64>,
    pub meta: TrainingMeta,
}

impl Model {
    pub fn zeros(vocabulary_size: usize, meta: TrainingMeta) -> Self {
        let columns = vocabulary_size + 1;
        Model {
            columns,
            weights: vec![0.0; NUM_GOALS * columns],
            meta,
        }
    }

    /// Fails if the length does not match, an entry is non-finite, or goal
    /// 4's row is non-zero.
    pub fn from_weights(vocabulary_size: usize, weights: Vec<f64>, meta: TrainingMeta) -> Result<Self, String> {
        let columns = vocabulary_size + 1;
        if weights.len() != NUM_GOALS * columns {
            return Err(format!(
                "expected {} weights, got {}",
                NUM_GOALS * columns,
                weights.len()
            ));
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err("weights contain non-finite values".into());
        }
        let m = Model { columns, weights, meta };
        if m.row(EXCLUDED_SLOT).iter().any(|&w| w != 0.0) {
            return Err("goal 4 row must be zero".into());
        }
        Ok(m)
    }

    pub fn vocabulary_size(&self) -> usize {
        self.columns - 1
    }

    pub fn columns(&self) -> usize {
        self.columns
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn row(&self, slot: usize) -> &[f64] {
        &self.weights[slot * self.columns..(slot + 1) * self.columns]
    }

    pub fn logits(&self, x: &SparseVec) -> [f64; NUM_GOALS] {
        logits(&self.weights, self.columns, x)
    }

    pub fn scores(&self, x: &SparseVec) -> [f64; NUM_GOALS] {
        self.logits(x).map(sigmoid)
    }
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

fn logits(weights: &[f64], columns: usize, x: &SparseVec) -> [f64; NUM_GOALS] {
    let mut z = [0.0; NUM_GOALS];
    for (slot, zs) in z.iter_mut().enumerate() {
        let row = &weights[slot * columns..(slot + 1) * columns];
        *zs = row[columns - 1] + x.iter().map(|&(j, v)| row[j as usize] * v).sum::<f64>();
    }
    z
}

/// A featurized training example.
#[derive(Debug, Clone, PartialEq)]
pub struct Example {
    pub features: SparseVec,
    pub labels: LabelVector,
}

/// Objective over a fixed example set, exposed for gradient checking.
pub struct Objective<'a> {
    pub examples: &'a [Example],
    pub columns: usize,
    pub l2: f64,
}

impl Objective<'_> {
    pub fn loss(&self, weights: &[f64]) -> f64 {
        self.loss_and_gradient(weights, false).0
    }

    /// Loss and its gradient with respect to every weight. Goal 4's row has
    /// zero gradient.
    pub fn loss_and_gradient(&self, weights: &[f64], with_gradient: bool) -> (f64, Vec<f64>) {
        let n = self.examples.len() as f64;
        let cols = self.columns;
        let mut grad = if with_gradient {
            vec![0.0; weights.len()]
        } else {
            Vec::new()
        };
        let mut data_loss = 0.0;
        // Per-document contributions are summed in index order.
        for ex in self.examples {
            let z = logits(weights, cols, &ex.features);
            for slot in (0..NUM_GOALS).filter(|&s| s != EXCLUDED_SLOT) {
                let y = f64::from(ex.labels.slots()[slot]);
                data_loss += softplus(z[slot]) - y * z[slot];
                if with_gradient {
                    let r = (sigmoid(z[slot]) - y) / n;
                    let row = &mut grad[slot * cols..(slot + 1) * cols];
                    for &(j, v) in &ex.features {
                        row[j as usize] += r * v;
                    }
                    row[cols - 1] += r;
                }
            }
        }
        let mut penalty = 0.0;
        for slot in (0..NUM_GOALS).filter(|&s| s != EXCLUDED_SLOT) {
            let row = &weights[slot * cols..(slot + 1) * cols - 1];
            penalty += row.iter().map(|w| w * w).sum::<f64>();
            if with_gradient {
                for (g, w) in grad[slot * cols..(slot + 1) * cols - 1].iter_mut().zip(row) {
                    *g += self.l2 * w;
                }
            }
        }
        (data_loss / n + 0.5 * self.l2 * penalty, grad)
    }
}

pub fn featurize(featurizer: &Featurizer, items: &[(&str, LabelVector)]) -> Vec<Example> {
    items
        .iter()
        .map(|(text, labels)| Example {
            features: featurizer.transform(text),
            labels: *labels,
        })
        .collect()
}

/// Per-epoch record of the full-batch loss before each update.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingTrace {
    pub losses: Vec<f64>,
}

/// Gradient descent from zero weights. Validation micro-F1 (top-3 rule) is
/// recorded after every epoch when a validation set is given.
pub fn train(
    vocabulary_size: usize,
    train: &[Example],
    validation: &[Example],
    hyper: &Hyperparameters,
) -> Result<(Model, TrainingTrace), TrainError> {
    hyper.validate().map_err(TrainError::Hyper)?;
    if train.is_empty() {
        return Err(TrainError::EmptyTrainingSet);
    }
    let columns = vocabulary_size + 1;
    let objective = Objective {
        examples: train,
        columns,
        l2: hyper.l2,
    };
    let mut weights = vec![0.0; NUM_GOALS * columns];
    let mut losses = Vec::with_capacity(hyper.epochs as usize);
    let mut history = Vec::with_capacity(hyper.epochs as usize);
    for epoch in 0..hyper.epochs {
        let (loss, grad) = objective.loss_and_gradient(&weights, true);
        if !loss.is_finite() {
            return Err(TrainError::Divergence { epoch });
        }
        losses.push(loss);
        for (w, g) in weights.iter_mut().zip(&grad) {
            *w -= hyper.learning_rate * g;
        }
        if !validation.is_empty() {
            history.push(validation_f1(&weights, columns, validation));
        }
    }
    let final_loss = objective.loss(&weights);
    if !final_loss.is_finite() || weights.iter().any(|w| !w.is_finite()) {
        return Err(TrainError::Divergence { epoch: hyper.epochs });
    }
    let meta = TrainingMeta {
        epochs: hyper.epochs,
        learning_rate: hyper.learning_rate,
        l2: hyper.l2,
        seed: hyper.seed,
        final_loss,
        validation_micro_f1: history,
    };
    Ok((Model { columns, weights, meta }, TrainingTrace { losses }))
}

fn validation_f1(weights: &[f64], columns: usize, validation: &[Example]) -> f64 {
    let pred: Vec<LabelVector> = validation
        .iter()
        .map(|ex| decide(&logits(weights, columns, &ex.features), DecisionRule::TopK(3)))
        .collect();
    let gold: Vec<LabelVector> = validation.iter().map(|ex| ex.labels).collect();
    micro_metrics(&pred, &gold).expect("equal lengths").f1
}
