//! Piecewise-constant (staircase) signals of time.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ProfileError {
    #[error("staircase needs at least one level")]
    Empty,
    #[error("staircase has {starts} start times but {levels} levels")]
    LengthMismatch { starts: usize, levels: usize },
    #[error("staircase start times must be strictly increasing (index {0})")]
    NotIncreasing(usize),
    #[error("staircase level {index} is {value}; levels must be finite and non-negative")]
    BadLevel { index: usize, value: f64 },
}

/// Time unit a profile and its rate coefficients are expressed in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TimeUnit {
    Seconds,
    #[default]
    Hours,
}

impl TimeUnit {
    pub fn label(self) -> &'static str {
        match self {
            TimeUnit::Seconds => "s",
            TimeUnit::Hours => "h",
        }
    }
}

/// A right-continuous step function: `levels[k]` holds on `[starts[k], starts[k+1])`.
///
/// Before `starts[0]` the signal is zero. The last level holds forever.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Staircase {
    starts: Vec<f64>,
    levels: Vec<f64>,
}

impl Staircase {
    pub fn new(starts: Vec<f64>, levels: Vec<f64>) -> Result<Self, ProfileError> {
        if levels.is_empty() {
            return Err(ProfileError::Empty);
        }
        if starts.len() != levels.len() {
            return Err(ProfileError::LengthMismatch {
                starts: starts.len(),
                levels: levels.len(),
            });
        }
        if let Some(k) = starts.windows(2).position(|w| w[1] <= w[0]) {
            return Err(ProfileError::NotIncreasing(k + 1));
        }
        if let Some((index, &value)) = levels.iter().enumerate().find(|(_, v)| !v.is_finite() || **v < 0.0) {
            return Err(ProfileError::BadLevel { index, value });
        }
        Ok(Self { starts, levels })
    }

    pub fn constant(level: f64) -> Self {
        Self::new(vec![0.0], vec![level]).expect("constant level must be finite and >= 0")
    }

    pub fn value_at(&self, t: f64) -> f64 {
        match self.starts.partition_point(|&s| s <= t) {
            0 => 0.0,
            k => self.levels[k - 1],
        }
    }

    pub fn starts(&self) -> &[f64] {
        &self.starts
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    /// Instants where the value may change, excluding a start at `t = 0`.
    pub fn breakpoints(&self) -> impl Iterator<Item = f64> + '_ {
        self.starts.iter().copied().filter(|&s| s > 0.0)
    }

    /// Multiply every level by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            starts: self.starts.clone(),
            levels: self.levels.iter().map(|v| v * factor).collect(),
        }
    }
}

/// Sorted, de-duplicated union of breakpoints.
pub fn merge_breakpoints<'a>(profiles: impl IntoIterator<Item = &'a Staircase>) -> Vec<f64> {
    let mut all: Vec<f64> = profiles.into_iter().flat_map(|p| p.breakpoints()).collect();
    all.sort_by(f64::total_cmp);
    all.dedup();
    all
}
