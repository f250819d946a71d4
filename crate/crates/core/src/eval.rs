//! Micro-averaged and per-goal precision, recall and F1.
//!
//! Every ratio with a zero denominator is reported as 0.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::labels::{LabelVector, NUM_GOALS};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("{pred} predictions for {gold} gold vectors")]
pub struct LengthMismatchError {
    pub pred: usize,
    pub gold: usize,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl Counts {
    pub fn precision(&self) -> f64 {
        ratio(self.tp, self.tp + self.fp)
    }

    pub fn recall(&self) -> f64 {
        ratio(self.tp, self.tp + self.fn_)
    }

    pub fn f1(&self) -> f64 {
        f1_score(self.precision(), self.recall())
    }
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Harmonic mean, 0 when both inputs are 0.
pub fn f1_score(precision: f64, recall: f64) -> f64 {
    if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MicroScores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub counts: Counts,
}

fn check(pred: &[LabelVector], gold: &[LabelVector]) -> Result<(), LengthMismatchError> {
    if pred.len() != gold.len() {
        return Err(LengthMismatchError {
            pred: pred.len(),
            gold: gold.len(),
        });
    }
    Ok(())
}

fn per_goal_counts(pred: &[LabelVector], gold: &[LabelVector]) -> [Counts; NUM_GOALS] {
    let mut counts = [Counts::default(); NUM_GOALS];
    for (p, g) in pred.iter().zip(gold) {
        for (slot, c) in counts.iter_mut().enumerate() {
            match (p.is_set(slot), g.is_set(slot)) {
                (true, true) => c.tp += 1,
                (true, false) => c.fp += 1,
                (false, true) => c.fn_ += 1,
                (false, false) => {}
            }
        }
    }
    counts
}

/// TP, FP and FN pooled over every (course, goal) pair.
pub fn micro_metrics(pred: &[LabelVector], gold: &[LabelVector]) -> Result<MicroScores, LengthMismatchError> {
    check(pred, gold)?;
    let pooled = per_goal_counts(pred, gold)
        .iter()
        .fold(Counts::default(), |acc, c| Counts {
            tp: acc.tp + c.tp,
            fp: acc.fp + c.fp,
            fn_: acc.fn_ + c.fn_,
        });
    Ok(MicroScores {
        precision: pooled.precision(),
        recall: pooled.recall(),
        f1: pooled.f1(),
        counts: pooled,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoalMetrics {
    pub goal: u8,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    /// No gold positives and no predictions: F1 is reported as 0 and the row
    /// is left out of macro averages.
    pub zero_support: bool,
}

pub fn per_label_f1(pred: &[LabelVector], gold: &[LabelVector]) -> Result<Vec<GoalMetrics>, LengthMismatchError> {
    check(pred, gold)?;
    Ok(per_goal_counts(pred, gold)
        .iter()
        .enumerate()
        .map(|(slot, c)| GoalMetrics {
            goal: (slot + 1) as u8,
            precision: c.precision(),
            recall: c.recall(),
            f1: c.f1(),
            support: c.tp + c.fn_,
            tp: c.tp,
            fp: c.fp,
            fn_: c.fn_,
            zero_support: c.tp + c.fn_ == 0 && c.fp == 0,
        })
        .collect())
}

/// Mean F1 over rows that are not zero-support; 0 when no row qualifies.
pub fn macro_f1(rows: &[GoalMetrics]) -> f64 {
    let kept: Vec<f64> = rows.iter().filter(|r| !r.zero_support).map(|r| r.f1).collect();
    if kept.is_empty() {
        0.0
    } else {
        kept.iter().sum::<f64>() / kept.len() as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub model_name: String,
    pub dataset_name: String,
    pub micro_precision: f64,
    pub micro_recall: f64,
    pub micro_f1: f64,
    #[serde(default)]
    pub per_goal: Vec<GoalMetrics>,
}

impl MetricsReport {
    pub fn evaluate(
        model_name: &str,
        dataset_name: &str,
        pred: &[LabelVector],
        gold: &[LabelVector],
    ) -> Result<Self, LengthMismatchError> {
        let micro = micro_metrics(pred, gold)?;
        Ok(MetricsReport {
            model_name: model_name.to_string(),
            dataset_name: dataset_name.to_string(),
            micro_precision: micro.precision,
            micro_recall: micro.recall,
            micro_f1: micro.f1,
            per_goal: per_label_f1(pred, gold)?,
        })
    }

    pub fn per_goal_csv(&self) -> String {
        let mut out = String::from("goal,f1,support\n");
        for r in &self.per_goal {
            out.push_str(&format!("{},{:.3},{}\n", r.goal, r.f1, r.support));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    /// Sorted by micro-F1 descending, then precision descending, then name.
    pub rows: Vec<MetricsReport>,
}

impl Comparison {
    pub fn best(&self) -> Option<&MetricsReport> {
        self.rows.first()
    }

    /// `model,precision,recall,f1` with three decimals.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("model,precision,recall,f1\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{:.3},{:.3},{:.3}\n",
                crate::preprocess::csv_field(&r.model_name),
                r.micro_precision,
                r.micro_recall,
                r.micro_f1
            ));
        }
        out
    }
}

pub fn compare_models(reports: &[MetricsReport]) -> Comparison {
    let mut rows = reports.to_vec();
    rows.sort_by(|a, b| {
        b.micro_f1
            .total_cmp(&a.micro_f1)
            .then_with(|| b.micro_precision.total_cmp(&a.micro_precision))
            .then_with(|| a.model_name.cmp(&b.model_name))
    });
    Comparison { rows }
}
