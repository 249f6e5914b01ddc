//! The `run`, `bench`, `compare` and `space-info` subcommands.

use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use theta_dse_core::envs::{Distance, Environment, SyntheticEnv};
use theta_dse_core::ga::{run_ga, GaConfig};
use theta_dse_core::policy::{encode_checkpoint, PolicyNet};
use theta_dse_core::resonance::{train, weighted_reward};
use theta_dse_core::space::{DesignPoint, DesignSpace};
use theta_dse_core::trace::{median_min_max, RunAbort, RunTrace};

use crate::config::{EnvConfig, Experiment, Method};
use crate::evaluator::ExternalEnv;
use crate::io::{self, Aggregate, RunStatus, Summary};
use crate::presets::{self, BenchMethod};
use crate::{CliError, CliResult};

/// Header lines describing the space, echoed before a run starts.
pub fn space_report(space: &DesignSpace) -> String {
    let mut s = String::new();
    let cards: Vec<String> = space.cardinalities().iter().map(usize::to_string).collect();
    let _ = writeln!(s, "space: {}", space.name());
    let _ = writeln!(s, "D: {}", space.dims());
    let _ = writeln!(s, "cardinalities: {}", cards.join(","));
    let _ = writeln!(s, "total_width: {}", space.total_width());
    match space.space_size_exact() {
        Some(n) => {
            let _ = writeln!(s, "space_size: {n} ({:.6e})", space.space_size());
        }
        None => {
            let _ = writeln!(s, "space_size: {:.6e}", space.space_size());
        }
    }
    s
}

fn runtime(e: impl Into<anyhow::Error>) -> CliError {
    CliError::Runtime(e.into())
}

/// What one seed produced.
#[derive(Debug, Clone)]
pub struct SeedResult {
    pub seed: u64,
    pub summary: Summary,
    pub trace: RunTrace,
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub output_dir: PathBuf,
    pub seeds: Vec<SeedResult>,
    pub aggregate: Aggregate,
}

fn make_env(exp: &Experiment, seed: u64) -> CliResult<Box<dyn Environment>> {
    Ok(match &exp.env {
        EnvConfig::Synthetic(s) => Box::new(SyntheticEnv::over_space(exp.space.clone(), s.distance, s.seed.unwrap_or(seed))),
        EnvConfig::External(spec) => Box::new(ExternalEnv::spawn(spec, &exp.space).map_err(runtime)?),
    })
}

struct Finished {
    trace: RunTrace,
    best_design: Option<DesignPoint>,
    best_reward: Option<f64>,
    evaluations: u64,
    warnings: Vec<String>,
    net: Option<PolicyNet>,
}

fn run_seed(exp: &Experiment, seed: u64, env: &mut dyn Environment) -> Result<Finished, RunAbort> {
    match &exp.method {
        Method::Resonance { architecture, hyper } => {
            let net = PolicyNet::build(&exp.space, architecture.clone(), seed).map_err(|error| RunAbort {
                error,
                trace: RunTrace::new(),
            })?;
            let out = train(net, env, hyper.clone(), seed)?;
            Ok(Finished {
                best_design: out.best_design,
                best_reward: Some(out.best_reward),
                evaluations: out.evaluations,
                trace: out.trace,
                warnings: out.warnings,
                net: Some(out.net),
            })
        }
        Method::Ga(cfg) => {
            let cfg = GaConfig { seed, ..cfg.clone() };
            let out = run_ga(env, &exp.weights, &cfg)?;
            Ok(Finished {
                best_design: out.best_design,
                best_reward: Some(out.best_reward),
                evaluations: out.evaluations,
                trace: out.trace,
                warnings: Vec::new(),
                net: None,
            })
        }
    }
}

/// Runs every seed of `exp`, writing artifacts as each seed finishes.
///
/// A failing seed still leaves its partial trace and an `aborted` summary
/// behind; the remaining seeds are skipped.
pub fn cmd_run(exp: &Experiment, log: &mut dyn Write) -> CliResult<RunReport> {
    let dir = &exp.output_dir;
    std::fs::create_dir_all(dir)
        .with_context(|| format!("cannot create output directory {}", dir.display()))
        .map_err(CliError::Runtime)?;
    io::write_json(&dir.join(io::CONFIG_JSON), &exp.document).map_err(runtime)?;

    let mut header = space_report(&exp.space);
    let _ = writeln!(header, "method: {}", exp.method.name());
    if let Method::Resonance { architecture, .. } = &exp.method {
        let _ = writeln!(header, "architecture: {architecture}");
    }
    let _ = writeln!(header, "max_evaluations: {}", exp.method.max_evaluations());
    let seeds: Vec<String> = exp.seeds.iter().map(u64::to_string).collect();
    let _ = writeln!(header, "seeds: {}", seeds.join(","));
    let _ = writeln!(header, "output_dir: {}", dir.display());
    let _ = log.write_all(header.as_bytes());

    let mut results = Vec::new();
    let mut optimum_reward = None;
    for &seed in &exp.seeds {
        let mut env = make_env(exp, seed)?;
        optimum_reward = env.optimum_objectives().and_then(|o| weighted_reward(&o, &exp.weights).ok());
        let outcome = run_seed(exp, seed, env.as_mut());
        drop(env);

        let (finished, failure) = match outcome {
            Ok(f) => (f, None),
            Err(RunAbort { error, trace }) => {
                let f = Finished {
                    best_design: None,
                    best_reward: trace.best_at_budget(u64::MAX),
                    evaluations: trace.evaluations(),
                    trace,
                    warnings: Vec::new(),
                    net: None,
                };
                (f, Some(error))
            }
        };
        io::write_trace_csv(&io::trace_path(dir, seed), &finished.trace).map_err(runtime)?;
        if let Some(net) = &finished.net {
            std::fs::write(io::checkpoint_path(dir, seed), encode_checkpoint(net)).map_err(runtime)?;
        }
        let best_reward = finished.best_reward.filter(|r| r.is_finite());
        let summary = Summary {
            method: exp.method.name().into(),
            seed,
            status: if failure.is_some() { RunStatus::Aborted } else { RunStatus::Completed },
            error: failure.as_ref().map(ToString::to_string),
            best_design: finished.best_design.as_ref().and_then(|d| exp.space.point_to_labels(d).ok()),
            best_reward,
            best_penalty: best_reward.map(|r| -r),
            evaluations_used: finished.evaluations,
            optimum_reward,
            reached_optimum: optimum_reward.map(|o| best_reward.is_some_and(|b| b >= o)),
            samples_to_optimum: optimum_reward.and_then(|o| finished.trace.samples_to_reach(o)),
            warnings: finished.warnings,
        };
        io::write_json(&io::summary_path(dir, seed), &summary).map_err(runtime)?;
        let _ = writeln!(
            log,
            "seed {seed}: {} best_reward={} evaluations={}{}",
            if failure.is_some() { "aborted" } else { "done" },
            best_reward.map_or("none".into(), |r| r.to_string()),
            summary.evaluations_used,
            summary.reached_optimum.map_or(String::new(), |r| format!(" reached_optimum={r}")),
        );
        results.push(SeedResult {
            seed,
            summary,
            trace: finished.trace,
        });
        if let Some(error) = failure {
            write_aggregate(exp, dir, &results, optimum_reward)?;
            return Err(CliError::Runtime(anyhow!("seed {seed} aborted: {error}")));
        }
    }
    let aggregate = write_aggregate(exp, dir, &results, optimum_reward)?;
    Ok(RunReport {
        output_dir: dir.clone(),
        seeds: results,
        aggregate,
    })
}

fn write_aggregate(exp: &Experiment, dir: &Path, results: &[SeedResult], optimum_reward: Option<f64>) -> CliResult<Aggregate> {
    let traces: Vec<(u64, RunTrace)> = results.iter().map(|r| (r.seed, r.trace.clone())).collect();
    let agg = Aggregate::from_traces(exp.method.name(), exp.space.name(), exp.method.max_evaluations(), optimum_reward, &traces);
    io::write_json(&dir.join(io::AGGREGATE_JSON), &agg).map_err(runtime)?;
    io::write_aggregate_csv(&dir.join(io::AGGREGATE_CSV), &agg).map_err(runtime)?;
    Ok(agg)
}

/// Resolves a benchmark preset into a runnable experiment.
pub fn bench_experiment(
    preset: &str,
    method: BenchMethod,
    distance: Distance,
    overrides: &crate::config::Overrides,
) -> CliResult<Experiment> {
    let mut cfg = presets::bench_config(preset, method, distance)?;
    cfg.apply(overrides)?;
    cfg.resolve(Path::new(""))
}

/// One directory's contribution to a comparison.
#[derive(Debug, Clone)]
pub struct CompareEntry {
    pub source: PathBuf,
    pub aggregate: Aggregate,
    pub traces: Vec<(u64, RunTrace)>,
}

#[derive(Debug, Clone)]
pub struct CompareReport {
    pub entries: Vec<CompareEntry>,
    pub threshold: Option<f64>,
    pub verdict: String,
}

fn load_entry(dir: &Path) -> CliResult<CompareEntry> {
    let agg_path = dir.join(io::AGGREGATE_JSON);
    if !agg_path.is_file() {
        return Err(CliError::config(format!("{} has no {}", dir.display(), io::AGGREGATE_JSON)));
    }
    let aggregate: Aggregate = io::read_json(&agg_path).map_err(CliError::Config)?;
    if aggregate.per_seed.is_empty() {
        return Err(CliError::config(format!("{} lists no seeds", agg_path.display())));
    }
    let mut traces = Vec::new();
    for s in &aggregate.per_seed {
        let t = io::read_trace_csv(&io::trace_path(dir, s.seed)).map_err(CliError::Config)?;
        traces.push((s.seed, t));
    }
    Ok(CompareEntry {
        source: dir.to_path_buf(),
        aggregate,
        traces,
    })
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map_or_else(|| "n/a".into(), |v| v.to_string())
}

/// Merges the aggregates of several run directories and writes a verdict.
///
/// The threshold for samples-to-threshold defaults to the declared optimum
/// reward when all directories agree on one.
pub fn cmd_compare(dirs: &[PathBuf], threshold: Option<f64>, out_dir: Option<&Path>) -> CliResult<CompareReport> {
    if dirs.len() < 2 {
        return Err(CliError::config("compare needs at least two run directories"));
    }
    let entries = dirs.iter().map(|d| load_entry(d)).collect::<CliResult<Vec<_>>>()?;
    let threshold = threshold.or_else(|| {
        let first = entries[0].aggregate.optimum_reward?;
        entries.iter().all(|e| e.aggregate.optimum_reward == Some(first)).then_some(first)
    });

    let mut verdict = String::new();
    if let Some(t) = threshold {
        let _ = writeln!(verdict, "threshold: {t}");
    }
    for e in &entries {
        let a = &e.aggregate;
        let finals = a.final_bests();
        let (median, min, max) = median_min_max(&finals).map_or((None, None, None), |(m, lo, hi)| (Some(m), Some(lo), Some(hi)));
        let _ = write!(
            verdict,
            "{} [{}]: seeds={} final_best median={} min={} max={}",
            a.method,
            e.source.display(),
            a.per_seed.len(),
            fmt_opt(median),
            fmt_opt(min),
            fmt_opt(max)
        );
        if let Some(t) = threshold {
            let hits: Vec<f64> = e.traces.iter().filter_map(|(_, tr)| tr.samples_to_reach(t)).map(|n| n as f64).collect();
            let med = median_min_max(&hits).map(|s| s.0);
            let _ = write!(verdict, " reached_threshold={}/{} median_samples_to_threshold={}", hits.len(), e.traces.len(), fmt_opt(med));
        }
        if let Some(n) = a.reached_optimum_count {
            let _ = write!(verdict, " reached_optimum={n}/{}", a.per_seed.len());
        }
        verdict.push('\n');
    }

    if let Some(out) = out_dir {
        std::fs::create_dir_all(out).map_err(runtime)?;
        let path = out.join("compare.csv");
        let mut w = csv::Writer::from_path(&path).map_err(runtime)?;
        w.write_record(["source", "method", "budget", "seeds", "median_best_reward", "min_best_reward", "max_best_reward"])
            .map_err(runtime)?;
        for e in &entries {
            for b in &e.aggregate.budgets {
                let o = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
                w.write_record([
                    e.source.display().to_string(),
                    e.aggregate.method.clone(),
                    b.budget.to_string(),
                    b.seeds.to_string(),
                    o(b.median),
                    o(b.min),
                    o(b.max),
                ])
                .map_err(runtime)?;
            }
        }
        w.flush().map_err(runtime)?;
        std::fs::write(out.join("verdict.txt"), &verdict).map_err(runtime)?;
    }
    Ok(CompareReport {
        entries,
        threshold,
        verdict,
    })
}

/// Loads a space from a file or a preset name and describes it.
pub fn cmd_space_info(file: Option<&Path>, preset: Option<&str>) -> CliResult<String> {
    let space = match (file, preset) {
        (Some(f), None) => {
            let text = std::fs::read_to_string(f)
                .with_context(|| format!("cannot read {}", f.display()))
                .map_err(CliError::Config)?;
            DesignSpace::parse_json(&text).map_err(CliError::config)?
        }
        (None, Some(p)) => presets::space(p)?,
        _ => return Err(CliError::config("give either a space file or --preset")),
    };
    Ok(space_report(&space))
}
