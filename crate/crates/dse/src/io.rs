//! Run artifacts: trace CSVs, per-seed summaries, aggregates and checkpoints.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use theta_dse_core::trace::{log_budgets, median_min_max, RunTrace, TraceRow, TRACE_COLUMNS};

pub const AGGREGATE_JSON: &str = "aggregate.json";
pub const AGGREGATE_CSV: &str = "aggregate.csv";
pub const CONFIG_JSON: &str = "config.json";

pub fn trace_path(dir: &Path, seed: u64) -> PathBuf {
    dir.join(format!("trace_seed{seed}.csv"))
}

pub fn summary_path(dir: &Path, seed: u64) -> PathBuf {
    dir.join(format!("summary_seed{seed}.json"))
}

pub fn checkpoint_path(dir: &Path, seed: u64) -> PathBuf {
    dir.join(format!("checkpoint_seed{seed}.bin"))
}

/// Writes a trace with the fixed column order; floats use shortest
/// round-trip formatting, so equal traces give equal bytes.
pub fn write_trace_csv(path: &Path, trace: &RunTrace) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("cannot create {}", path.display()))?;
    w.write_record(TRACE_COLUMNS)?;
    for r in trace.rows() {
        w.write_record([
            r.cycle.to_string(),
            r.evaluations.to_string(),
            r.batch_mean_reward.to_string(),
            r.running_reward.to_string(),
            r.best_reward.to_string(),
            r.beta_e.to_string(),
            r.loss_u.to_string(),
            r.loss_kl.to_string(),
            r.loss_e.to_string(),
            r.anomaly_count.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a trace back, rejecting files whose header differs from the schema.
pub fn read_trace_csv(path: &Path) -> Result<RunTrace> {
    let mut r = csv::Reader::from_path(path).with_context(|| format!("cannot open {}", path.display()))?;
    let header: Vec<String> = r.headers()?.iter().map(str::to_owned).collect();
    if header != TRACE_COLUMNS {
        bail!("{}: header {:?} does not match the trace schema", path.display(), header);
    }
    let mut rows = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec?;
        let f = |i: usize| -> Result<f64> {
            rec[i]
                .parse::<f64>()
                .with_context(|| format!("{} row {}: bad {}", path.display(), line + 1, TRACE_COLUMNS[i]))
        };
        let u = |i: usize| -> Result<u64> {
            rec[i]
                .parse::<u64>()
                .with_context(|| format!("{} row {}: bad {}", path.display(), line + 1, TRACE_COLUMNS[i]))
        };
        rows.push(TraceRow {
            cycle: u(0)?,
            evaluations: u(1)?,
            batch_mean_reward: f(2)?,
            running_reward: f(3)?,
            best_reward: f(4)?,
            beta_e: f(5)?,
            loss_u: f(6)?,
            loss_kl: f(7)?,
            loss_e: f(8)?,
            anomaly_count: u(9)?,
        });
    }
    Ok(RunTrace::from_rows(rows))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Completed,
    Aborted,
}

/// Per-seed result document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub method: String,
    pub seed: u64,
    pub status: RunStatus,
    #[serde(default)]
    pub error: Option<String>,
    /// Dimension name to choice label.
    pub best_design: Option<BTreeMap<String, String>>,
    pub best_reward: Option<f64>,
    /// `-best_reward`.
    pub best_penalty: Option<f64>,
    pub evaluations_used: u64,
    /// Reward of the optimum when the environment declares one.
    pub optimum_reward: Option<f64>,
    pub reached_optimum: Option<bool>,
    pub samples_to_optimum: Option<u64>,
    #[serde(default)]
    pub warnings: Vec<String>,
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("{} is not a valid document", path.display()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedBest {
    pub seed: u64,
    pub best_reward: Option<f64>,
    pub evaluations: u64,
    pub reached_optimum: Option<bool>,
    pub samples_to_optimum: Option<u64>,
}

/// Best-so-far statistics across seeds at one evaluation budget.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BudgetStat {
    pub budget: u64,
    /// Seeds with at least one scored design within the budget.
    pub seeds: usize,
    pub median: Option<f64>,
    pub min: Option<f64>,
    pub max: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub method: String,
    pub space: String,
    pub max_evaluations: u64,
    pub optimum_reward: Option<f64>,
    pub reached_optimum_count: Option<usize>,
    pub per_seed: Vec<SeedBest>,
    pub budgets: Vec<BudgetStat>,
}

pub const AGGREGATE_COLUMNS: [&str; 6] = ["method", "budget", "seeds", "median_best_reward", "min_best_reward", "max_best_reward"];

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

impl Aggregate {
    /// Recomputes the aggregate from raw traces, in seed order as given.
    pub fn from_traces(method: &str, space: &str, max_evaluations: u64, optimum_reward: Option<f64>, traces: &[(u64, RunTrace)]) -> Self {
        let per_seed: Vec<SeedBest> = traces
            .iter()
            .map(|(seed, t)| {
                let best = t.best_at_budget(u64::MAX);
                SeedBest {
                    seed: *seed,
                    best_reward: best,
                    evaluations: t.evaluations(),
                    reached_optimum: optimum_reward.map(|o| best.is_some_and(|b| b >= o)),
                    samples_to_optimum: optimum_reward.and_then(|o| t.samples_to_reach(o)),
                }
            })
            .collect();
        let budgets = log_budgets(max_evaluations)
            .into_iter()
            .map(|budget| {
                let vals: Vec<f64> = traces.iter().filter_map(|(_, t)| t.best_at_budget(budget)).collect();
                let stats = median_min_max(&vals);
                BudgetStat {
                    budget,
                    seeds: vals.len(),
                    median: stats.and_then(|s| finite(s.0)),
                    min: stats.and_then(|s| finite(s.1)),
                    max: stats.and_then(|s| finite(s.2)),
                }
            })
            .collect();
        Aggregate {
            method: method.into(),
            space: space.into(),
            max_evaluations,
            optimum_reward,
            reached_optimum_count: optimum_reward.map(|_| per_seed.iter().filter(|s| s.reached_optimum == Some(true)).count()),
            per_seed,
            budgets,
        }
    }

    pub fn final_bests(&self) -> Vec<f64> {
        self.per_seed.iter().filter_map(|s| s.best_reward).collect()
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

pub fn write_aggregate_csv(path: &Path, agg: &Aggregate) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("cannot create {}", path.display()))?;
    w.write_record(AGGREGATE_COLUMNS)?;
    for b in &agg.budgets {
        w.write_record([agg.method.clone(), b.budget.to_string(), b.seeds.to_string(), opt(b.median), opt(b.min), opt(b.max)])?;
    }
    w.flush()?;
    Ok(())
}
