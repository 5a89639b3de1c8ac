use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::MaturityGrid;

/// Largest number of forward-price features.
pub const MAX_FEATURES: usize = 6;

/// Delay between a decision and the start of delivery, hours.
pub const DEFAULT_DELAY: f64 = 1.0;

/// When the regression features of step `i` are observed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureTiming {
    /// At the decision time `τ_i` itself; the policy only uses information available when it
    /// acts.
    #[default]
    DecisionTime,
    /// At the next decision time `τ_{i+1}`. The continuation is then conditioned on prices
    /// observed one step after the decision.
    NextDecision,
}

impl FeatureTiming {
    pub fn name(self) -> &'static str {
        match self {
            FeatureTiming::DecisionTime => "decision_time",
            FeatureTiming::NextDecision => "next_decision",
        }
    }
}

impl fmt::Display for FeatureTiming {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FeatureTiming {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "decision_time" | "decision" => Ok(FeatureTiming::DecisionTime),
            "next_decision" | "next" => Ok(FeatureTiming::NextDecision),
            _ => Err(Error::InvalidArgument(format!("unknown feature timing '{s}'"))),
        }
    }
}

/// Decision and observation times on the session clock.
///
/// Product `i` is traded once, at `τ_i = T_i - delay`. The features of step `i` are the prices
/// of the next `p' = min(p, M - 1 - i)` products, nearest first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionSchedule {
    pub decision_times: Vec<f64>,
    pub feature_times: Vec<f64>,
    pub p: usize,
    pub delay: f64,
    pub timing: FeatureTiming,
}

impl DecisionSchedule {
    pub fn new(grid: &MaturityGrid, p: usize, timing: FeatureTiming) -> Result<Self> {
        Self::with_delay(grid, p, DEFAULT_DELAY, timing)
    }

    pub fn with_delay(grid: &MaturityGrid, p: usize, delay: f64, timing: FeatureTiming) -> Result<Self> {
        if !(delay.is_finite() && delay >= 0.0) {
            return Err(Error::InvalidArgument(format!("decision delay {delay} must be >= 0")));
        }
        let decision_times: Vec<f64> = grid.maturities().iter().map(|t| t - delay).collect();
        if decision_times.first().is_some_and(|&t| t < 0.0) {
            return Err(Error::InvalidArgument(format!(
                "first decision time {} precedes the session start",
                decision_times[0]
            )));
        }
        let n = decision_times.len();
        let feature_times = match timing {
            FeatureTiming::DecisionTime => decision_times.clone(),
            FeatureTiming::NextDecision => (0..n).map(|i| decision_times[(i + 1).min(n - 1)]).collect(),
        };
        let schedule = Self {
            decision_times,
            feature_times,
            p,
            delay,
            timing,
        };
        schedule.validate()?;
        Ok(schedule)
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=MAX_FEATURES).contains(&self.p) {
            return Err(Error::InvalidArgument(format!(
                "p = {} outside 1..={MAX_FEATURES}",
                self.p
            )));
        }
        if self.decision_times.is_empty() || self.decision_times.len() != self.feature_times.len() {
            return Err(Error::InvalidArgument("decision and feature times must be nonempty and aligned".into()));
        }
        if self.decision_times.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidArgument("decision times must be strictly increasing".into()));
        }
        Ok(())
    }

    /// Same times with a different number of features.
    pub fn with_p(&self, p: usize) -> Result<Self> {
        let s = Self { p, ..self.clone() };
        s.validate()?;
        Ok(s)
    }

    pub fn n_steps(&self) -> usize {
        self.decision_times.len()
    }

    /// `p'` at step `i`.
    pub fn n_features(&self, i: usize) -> usize {
        self.p.min(self.n_steps() - 1 - i)
    }

    /// Every time at which a price is read, sorted.
    pub fn observation_times(&self) -> Vec<f64> {
        let mut t: Vec<f64> = self.decision_times.iter().chain(&self.feature_times).copied().collect();
        t.sort_by(f64::total_cmp);
        t.dedup();
        t
    }
}
