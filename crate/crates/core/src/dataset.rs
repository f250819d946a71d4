//! Train/validation/test split and label distribution.
//!
//! Shuffling uses ChaCha8 (`rand_chacha::ChaCha8Rng::seed_from_u64`) driving
//! a Fisher–Yates shuffle, so membership depends only on input order and seed.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::labelgen::LabeledCourse;
use crate::labels::NUM_GOALS;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitConfig {
    pub ratios: [f64; 3],
    pub seed: u64,
}

impl Default for SplitConfig {
    fn default() -> Self {
        SplitConfig {
            ratios: [0.70, 0.15, 0.15],
            seed: 42,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SplitError {
    #[error("need at least 3 items to split, got {0}")]
    TooFewItems(usize),
    #[error("split ratios {0:?} must be non-negative and sum to 1")]
    BadRatios([f64; 3]),
}

impl SplitConfig {
    pub fn validate(&self) -> Result<(), SplitError> {
        let sum: f64 = self.ratios.iter().sum();
        if self.ratios.iter().any(|r| !r.is_finite() || *r < 0.0) || (sum - 1.0).abs() > 1e-9 {
            return Err(SplitError::BadRatios(self.ratios));
        }
        Ok(())
    }

    /// (train, validation, test) sizes: floor for the first two, the rest to test.
    pub fn sizes(&self, n: usize) -> (usize, usize, usize) {
        // The epsilon absorbs representation error such as 0.7 * 10 = 7.000000000000001
        // landing just below an integer in other products.
        let take = |r: f64| ((r * n as f64 + 1e-9).floor() as usize).min(n);
        let train = take(self.ratios[0]);
        let val = take(self.ratios[1]).min(n - train);
        (train, val, n - train - val)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetBundle {
    pub train: Vec<LabeledCourse>,
    pub validation: Vec<LabeledCourse>,
    pub test: Vec<LabeledCourse>,
}

pub fn split_dataset(data: &[LabeledCourse], config: &SplitConfig) -> Result<DatasetBundle, SplitError> {
    let [train, validation, test] = split_indices(data.len(), config)?;
    let pick = |idx: &[usize]| idx.iter().map(|&i| data[i].clone()).collect::<Vec<_>>();
    Ok(DatasetBundle {
        train: pick(&train),
        validation: pick(&validation),
        test: pick(&test),
    })
}

/// Index form of [`split_dataset`]: positions `0..n` shuffled with ChaCha8
/// seeded from `config.seed`, then cut into train, validation and test.
pub fn split_indices(n: usize, config: &SplitConfig) -> Result<[Vec<usize>; 3], SplitError> {
    config.validate()?;
    if n < 3 {
        return Err(SplitError::TooFewItems(n));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(config.seed));
    let (n_train, n_val, _) = config.sizes(n);
    let test = order.split_off(n_train + n_val);
    let validation = order.split_off(n_train);
    Ok([order, validation, test])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoalShare {
    pub goal: u8,
    pub count: usize,
    pub percent: f64,
}

/// Courses per goal, with each goal's share of all label mentions.
pub fn label_distribution(data: &[LabeledCourse]) -> Vec<GoalShare> {
    let mut counts = [0usize; NUM_GOALS];
    for l in data {
        for (slot, count) in counts.iter_mut().enumerate() {
            *count += usize::from(l.labels.is_set(slot));
        }
    }
    let total: usize = counts.iter().sum();
    counts
        .iter()
        .enumerate()
        .map(|(slot, &count)| GoalShare {
            goal: (slot + 1) as u8,
            count,
            percent: if total == 0 {
                0.0
            } else {
                100.0 * count as f64 / total as f64
            },
        })
        .collect()
}

pub fn distribution_csv(rows: &[GoalShare]) -> String {
    let mut out = String::from("goal,count,percent\n");
    for r in rows {
        out.push_str(&format!("{},{},{:.4}\n", r.goal, r.count, r.percent));
    }
    out
}
