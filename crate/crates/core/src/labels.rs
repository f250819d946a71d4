//! SDG label sets and their fixed-width binary encoding.
//!
//! Goals are numbered 1..=17. Goal 4 (Quality Education) is excluded from
//! every label set but keeps its slot in the 17-wide vector, where it is
//! always zero.

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Number of UN sustainable development goals.
pub const NUM_GOALS: usize = 17;

/// The goal that is never emitted as a label.
pub const EXCLUDED_GOAL: u8 = 4;

/// Zero-based slot of the excluded goal.
pub const EXCLUDED_SLOT: usize = (EXCLUDED_GOAL - 1) as usize;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LabelError {
    #[error("goal {0} is outside 1..=17")]
    OutOfRange(i64),
    #[error("goal 4 is excluded and may not be used as a label")]
    ExcludedGoal,
    #[error("label vector has {0} slots, expected 17")]
    WrongLength(usize),
    #[error("label vector slot {slot} has value {value}, expected 0 or 1")]
    NotBinary { slot: usize, value: i64 },
}

/// Returns true when `goal` may appear in a label set.
pub fn is_valid_goal(goal: i64) -> bool {
    (1..=NUM_GOALS as i64).contains(&goal) && goal != EXCLUDED_GOAL as i64
}

/// Iterator over all selectable goals, ascending (goal 4 skipped).
pub fn selectable_goals() -> impl Iterator<Item = u8> {
    (1..=NUM_GOALS as u8).filter(|&g| g != EXCLUDED_GOAL)
}

/// A sorted, duplicate-free set of SDG goals with goal 4 excluded.
///
/// The empty set is representable so that all-zero vectors (e.g. an
/// untrained model's thresholded output) can be decoded for reporting.
/// Producers of training labels reject it explicitly.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LabelSet(Vec<u8>);

impl LabelSet {
    pub fn empty() -> Self {
        LabelSet(Vec::new())
    }

    /// Builds a set from arbitrary goal numbers; duplicates collapse.
    pub fn new<I>(goals: I) -> Result<Self, LabelError>
    where
        I: IntoIterator,
        I::Item: Into<i64>,
    {
        let mut out = Vec::new();
        for g in goals {
            let g: i64 = g.into();
            if !(1..=NUM_GOALS as i64).contains(&g) {
                return Err(LabelError::OutOfRange(g));
            }
            if g == EXCLUDED_GOAL as i64 {
                return Err(LabelError::ExcludedGoal);
            }
            out.push(g as u8);
        }
        out.sort_unstable();
        out.dedup();
        Ok(LabelSet(out))
    }

    pub fn goals(&self) -> &[u8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, goal: u8) -> bool {
        self.0.binary_search(&goal).is_ok()
    }

    pub fn encode(&self) -> LabelVector {
        let mut slots = [0u8; NUM_GOALS];
        for &g in &self.0 {
            slots[(g - 1) as usize] = 1;
        }
        LabelVector(slots)
    }
}

impl fmt::Display for LabelSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, g) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{g}")?;
        }
        write!(f, "}}")
    }
}

impl Serialize for LabelSet {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.0.serialize(s)
    }
}

impl<'de> Deserialize<'de> for LabelSet {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw = Vec::<i64>::deserialize(d)?;
        LabelSet::new(raw).map_err(serde::de::Error::custom)
    }
}

/// 17 binary slots; slot `i` corresponds to goal `i + 1`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct LabelVector([u8; NUM_GOALS]);

impl LabelVector {
    pub fn zeros() -> Self {
        LabelVector([0; NUM_GOALS])
    }

    pub fn slots(&self) -> &[u8; NUM_GOALS] {
        &self.0
    }

    pub fn is_set(&self, slot: usize) -> bool {
        self.0[slot] == 1
    }

    pub fn count_ones(&self) -> usize {
        self.0.iter().filter(|&&b| b == 1).count()
    }

    pub fn is_zero(&self) -> bool {
        self.count_ones() == 0
    }

    /// Validates a raw slot sequence. Goal 4's slot must be zero.
    pub fn from_slots(slots: &[i64]) -> Result<Self, LabelError> {
        if slots.len() != NUM_GOALS {
            return Err(LabelError::WrongLength(slots.len()));
        }
        let mut out = [0u8; NUM_GOALS];
        for (slot, &value) in slots.iter().enumerate() {
            match value {
                0 => {}
                1 if slot == EXCLUDED_SLOT => return Err(LabelError::ExcludedGoal),
                1 => out[slot] = 1,
                _ => return Err(LabelError::NotBinary { slot, value }),
            }
        }
        Ok(LabelVector(out))
    }

    /// Sets the slot for `goal`. Goal 4 and out-of-range goals are rejected.
    pub fn with_goal(mut self, goal: u8) -> Result<Self, LabelError> {
        if !is_valid_goal(goal as i64) {
            return Err(if goal == EXCLUDED_GOAL {
                LabelError::ExcludedGoal
            } else {
                LabelError::OutOfRange(goal as i64)
            });
        }
        self.0[(goal - 1) as usize] = 1;
        Ok(self)
    }

    pub fn decode(&self) -> LabelSet {
        LabelSet(
            self.0
                .iter()
                .enumerate()
                .filter(|(_, &b)| b == 1)
                .map(|(i, _)| (i + 1) as u8)
                .collect(),
        )
    }
}

impl Serialize for LabelVector {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.0.serialize(s)
    }
}

impl<'de> Deserialize<'de> for LabelVector {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw = Vec::<i64>::deserialize(d)?;
        LabelVector::from_slots(&raw).map_err(serde::de::Error::custom)
    }
}

/// Encodes a label set as a 17-slot binary vector.
pub fn encode_labels(set: &LabelSet) -> LabelVector {
    set.encode()
}

/// Decodes a vector back into its label set. All-zero decodes to the empty set.
pub fn decode_labels(vector: &LabelVector) -> LabelSet {
    vector.decode()
}
