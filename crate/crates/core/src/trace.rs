//! Append-only run traces shared by the policy-gradient engine and the GA
//! baseline, plus the budget aggregation used for best-so-far curves.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::Error;

/// One reporting row. Column order matches the CSV schema.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub cycle: u64,
    pub evaluations: u64,
    pub batch_mean_reward: f64,
    pub running_reward: f64,
    pub best_reward: f64,
    pub beta_e: f64,
    pub loss_u: f64,
    pub loss_kl: f64,
    pub loss_e: f64,
    pub anomaly_count: u64,
}

pub const TRACE_COLUMNS: [&str; 10] = [
    "cycle",
    "evaluations",
    "batch_mean_reward",
    "running_reward",
    "best_reward",
    "beta_e",
    "loss_u",
    "loss_kl",
    "loss_e",
    "anomaly_count",
];

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunTrace {
    rows: Vec<TraceRow>,
}

impl RunTrace {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_rows(rows: Vec<TraceRow>) -> Self {
        Self { rows }
    }

    pub fn push(&mut self, row: TraceRow) {
        self.rows.push(row);
    }

    pub fn rows(&self) -> &[TraceRow] {
        &self.rows
    }

    pub fn last(&self) -> Option<&TraceRow> {
        self.rows.last()
    }

    pub fn evaluations(&self) -> u64 {
        self.rows.last().map_or(0, |r| r.evaluations)
    }

    /// Best reward reported by any row with `evaluations <= budget`.
    pub fn best_at_budget(&self, budget: u64) -> Option<f64> {
        self.rows
            .iter()
            .filter(|r| r.evaluations <= budget && r.best_reward.is_finite())
            .map(|r| r.best_reward)
            .reduce(f64::max)
    }

    /// First evaluation count at which the best reward reached `threshold`.
    pub fn samples_to_reach(&self, threshold: f64) -> Option<u64> {
        self.rows.iter().find(|r| r.best_reward >= threshold).map(|r| r.evaluations)
    }
}

/// A run that stopped early; carries the rows recorded before the failure.
#[derive(Debug, Clone, thiserror::Error)]
#[error("run aborted after {} evaluations: {error}", trace.evaluations())]
pub struct RunAbort {
    pub error: Error,
    pub trace: RunTrace,
}

/// Budgets `1, 2, 5, 10, 20, 50, ...` up to `max`, always ending at `max`.
pub fn log_budgets(max: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut decade = 1u64;
    'outer: loop {
        for m in [1, 2, 5] {
            let Some(b) = decade.checked_mul(m) else { break 'outer };
            if b >= max {
                break 'outer;
            }
            out.push(b);
        }
        match decade.checked_mul(10) {
            Some(d) => decade = d,
            None => break,
        }
    }
    if max > 0 {
        out.push(max);
    }
    out
}

/// Median (mean of the middle pair for even counts), min and max.
pub fn median_min_max(values: &[f64]) -> Option<(f64, f64, f64)> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    let median = if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) };
    Some((median, v[0], v[n - 1]))
}
