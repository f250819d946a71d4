use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::labels::{LabelVector, EXCLUDED_SLOT, NUM_GOALS};

/// Maps per-goal scores to a label vector. Goal 4 is never selected.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecisionRule {
    /// The k highest-scoring goals; ties go to the lower goal number.
    TopK(usize),
    /// Every goal scoring strictly above the threshold.
    Threshold(f64),
}

impl Default for DecisionRule {
    fn default() -> Self {
        DecisionRule::TopK(3)
    }
}

impl DecisionRule {
    pub fn validate(&self) -> Result<(), String> {
        match *self {
            DecisionRule::TopK(k) if !(1..=NUM_GOALS - 1).contains(&k) => {
                Err(format!("top-k needs 1 <= k <= 16, got {k}"))
            }
            DecisionRule::Threshold(t) if !(t > 0.0 && t < 1.0) => {
                Err(format!("threshold must lie in (0, 1), got {t}"))
            }
            _ => Ok(()),
        }
    }
}

impl fmt::Display for DecisionRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DecisionRule::TopK(k) => write!(f, "top{k}"),
            DecisionRule::Threshold(t) => write!(f, "threshold:{t}"),
        }
    }
}

impl FromStr for DecisionRule {
    type Err = String;

    /// `top3`, `top-3`, `threshold:0.5` or `threshold=0.5`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim().to_ascii_lowercase();
        let rule = if let Some(k) = s.strip_prefix("top") {
            DecisionRule::TopK(
                k.trim_start_matches(['-', '_', ':'])
                    .parse()
                    .map_err(|_| format!("invalid k in {s:?}"))?,
            )
        } else if let Some(t) = s.strip_prefix("threshold") {
            DecisionRule::Threshold(
                t.trim_start_matches([':', '='])
                    .parse()
                    .map_err(|_| format!("invalid threshold in {s:?}"))?,
            )
        } else {
            return Err(format!("unknown decision rule {s:?}"));
        };
        rule.validate()?;
        Ok(rule)
    }
}

pub fn decide(scores: &[f64; NUM_GOALS], rule: DecisionRule) -> LabelVector {
    let mut slots = [0i64; NUM_GOALS];
    match rule {
        DecisionRule::TopK(k) => {
            let mut order: Vec<usize> = (0..NUM_GOALS).filter(|&s| s != EXCLUDED_SLOT).collect();
            // Stable sort keeps ascending goal order among equal scores.
            order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
            for &slot in order.iter().take(k) {
                slots[slot] = 1;
            }
        }
        DecisionRule::Threshold(t) => {
            for (slot, &s) in scores.iter().enumerate() {
                if slot != EXCLUDED_SLOT && s > t {
                    slots[slot] = 1;
                }
            }
        }
    }
    LabelVector::from_slots(&slots).expect("goal 4 masked")
}
