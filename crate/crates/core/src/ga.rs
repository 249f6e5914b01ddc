//! Genetic-algorithm baseline: steady-state population search mixing
//! uniform greedy mutation, normal greedy mutation and differential
//! evolution, with an epsilon-greedy bandit picking the operator.
//!
//! Categorical indices are treated as ordinals by the normal and
//! differential-evolution operators, as generic tuners do for enumerations.

use alloc::vec::Vec;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::envs::{Environment, EvalResult};
use crate::resonance::{weighted_reward, ObjectiveWeights};
use crate::space::{DesignPoint, DesignSpace};
use crate::trace::{RunAbort, RunTrace, TraceRow};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Operator {
    UniformGreedy,
    NormalGreedy,
    DiffEvolution,
}

pub const ALL_OPERATORS: [Operator; 3] = [Operator::UniformGreedy, Operator::NormalGreedy, Operator::DiffEvolution];

fn default_population() -> usize {
    32
}
fn default_operators() -> Vec<Operator> {
    ALL_OPERATORS.to_vec()
}
fn default_epsilon() -> f64 {
    0.1
}
fn default_de_weight() -> f64 {
    0.5
}
fn default_crossover() -> f64 {
    0.9
}
fn default_sigma_fraction() -> f64 {
    0.125
}
fn default_max_evaluations() -> u64 {
    10_000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaConfig {
    #[serde(default = "default_population")]
    pub population_size: usize,
    #[serde(default = "default_operators")]
    pub operators: Vec<Operator>,
    #[serde(default = "default_epsilon")]
    pub bandit_epsilon: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_max_evaluations")]
    pub max_evaluations: u64,
    /// Differential weight `F`.
    #[serde(default = "default_de_weight")]
    pub de_weight: f64,
    #[serde(default = "default_crossover")]
    pub crossover_rate: f64,
    /// Normal step deviation as a fraction of the dimension's cardinality.
    #[serde(default = "default_sigma_fraction")]
    pub sigma_fraction: f64,
}

impl Default for GaConfig {
    fn default() -> Self {
        Self {
            population_size: default_population(),
            operators: default_operators(),
            bandit_epsilon: default_epsilon(),
            seed: 0,
            max_evaluations: default_max_evaluations(),
            de_weight: default_de_weight(),
            crossover_rate: default_crossover(),
            sigma_fraction: default_sigma_fraction(),
        }
    }
}

impl GaConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::config(alloc::format!("GA config: {m}")));
        if self.population_size == 0 {
            return bad("population_size must be positive");
        }
        if self.operators.is_empty() {
            return bad("at least one operator must be enabled");
        }
        if !(0.0..=1.0).contains(&self.bandit_epsilon) || !(0.0..=1.0).contains(&self.crossover_rate) {
            return bad("bandit_epsilon and crossover_rate must be in [0, 1]");
        }
        if self.sigma_fraction.is_nan() || self.sigma_fraction <= 0.0 || !self.de_weight.is_finite() {
            return bad("sigma_fraction must be positive and de_weight finite");
        }
        if self.max_evaluations == 0 {
            return bad("max_evaluations must be positive");
        }
        Ok(())
    }
}

/// Parameters of the mutation operators.
#[derive(Debug, Clone, Copy)]
pub struct MutationParams {
    pub de_weight: f64,
    pub crossover_rate: f64,
    pub sigma_fraction: f64,
}

impl From<&GaConfig> for MutationParams {
    fn from(c: &GaConfig) -> Self {
        Self {
            de_weight: c.de_weight,
            crossover_rate: c.crossover_rate,
            sigma_fraction: c.sigma_fraction,
        }
    }
}

/// Reflects `x` into `[0, d)`.
fn reflect(mut x: i64, d: usize) -> usize {
    let d = d as i64;
    if d == 1 {
        return 0;
    }
    let period = 2 * (d - 1);
    x = x.rem_euclid(period);
    if x >= d {
        x = period - x;
    }
    x as usize
}

/// Produces a child from `parents`.
///
/// * `UniformGreedy`: resample one uniformly chosen dimension of `parents[0]`.
/// * `NormalGreedy`: shift one dimension of `parents[0]` by a rounded normal
///   step (`sigma = d_i * sigma_fraction`), reflected at the bounds.
/// * `DiffEvolution`: `a_i + round(F (b_i - c_i))`, clamped, taken per
///   dimension with probability `crossover_rate`, else `a_i`; `parents` is
///   `[a, b, c]` (missing entries default to `a`).
pub fn mutate<R: Rng + ?Sized>(space: &DesignSpace, parents: &[&DesignPoint], op: Operator, p: MutationParams, rng: &mut R) -> DesignPoint {
    let cards = space.cardinalities();
    let a = parents[0];
    let mut child = a.clone();
    match op {
        Operator::UniformGreedy => {
            let i = rng.random_range(0..cards.len());
            child.0[i] = rng.random_range(0..cards[i]);
        }
        Operator::NormalGreedy => {
            let i = rng.random_range(0..cards.len());
            let sigma = cards[i] as f64 * p.sigma_fraction;
            let step = Normal::new(0.0, sigma).map(|n| n.sample(rng)).unwrap_or(0.0);
            child.0[i] = reflect(a.0[i] as i64 + libm::round(step) as i64, cards[i]);
        }
        Operator::DiffEvolution => {
            let b = parents.get(1).copied().unwrap_or(a);
            let c = parents.get(2).copied().unwrap_or(a);
            for (i, &card) in cards.iter().enumerate() {
                if rng.random::<f64>() < p.crossover_rate {
                    let diff = b.0[i] as f64 - c.0[i] as f64;
                    let v = a.0[i] as i64 + libm::round(p.de_weight * diff) as i64;
                    child.0[i] = v.clamp(0, card as i64 - 1) as usize;
                }
            }
        }
    }
    child
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct OperatorStats {
    pub uses: u64,
    pub credit: f64,
}

#[derive(Debug, Clone)]
pub struct GaOutcome {
    pub trace: RunTrace,
    pub best_design: Option<DesignPoint>,
    pub best_reward: f64,
    pub evaluations: u64,
    pub operator_stats: Vec<(Operator, OperatorStats)>,
}

struct GaRun<'a, E: ?Sized> {
    env: &'a mut E,
    weights: &'a ObjectiveWeights,
    evaluations: u64,
    best: Option<(DesignPoint, f64)>,
    worst_seen: Option<f64>,
    window_sum: f64,
    window_count: u64,
    window_anomalies: u64,
}

impl<E: Environment + ?Sized> GaRun<'_, E> {
    fn score(&mut self, d: &DesignPoint) -> Result<f64> {
        let res = self.env.evaluate(d)?;
        self.evaluations += 1;
        let reward = match res {
            EvalResult::Objectives(o) => weighted_reward(&o, self.weights).ok().filter(|r| r.is_finite()),
            EvalResult::Anomaly(_) => None,
        };
        let r = match reward {
            Some(r) => {
                if self.best.as_ref().is_none_or(|(_, b)| r > *b) {
                    self.best = Some((d.clone(), r));
                }
                self.worst_seen = Some(self.worst_seen.map_or(r, |w| w.min(r)));
                r
            }
            None => {
                self.window_anomalies += 1;
                self.worst_seen.unwrap_or(0.0) - 1.0
            }
        };
        self.window_sum += r;
        self.window_count += 1;
        Ok(r)
    }

    /// Closes the partial window so the trace accounts for every evaluation.
    fn abort(&mut self, error: Error, generation: u64, population: &[(DesignPoint, f64)], mut trace: RunTrace) -> RunAbort {
        if self.window_count > 0 {
            trace.push(self.row(generation, population));
        }
        RunAbort { error, trace }
    }

    fn row(&mut self, generation: u64, population: &[(DesignPoint, f64)]) -> TraceRow {
        let pop_mean = population.iter().map(|p| p.1).sum::<f64>() / population.len().max(1) as f64;
        let row = TraceRow {
            cycle: generation,
            evaluations: self.evaluations,
            batch_mean_reward: if self.window_count > 0 { self.window_sum / self.window_count as f64 } else { 0.0 },
            running_reward: pop_mean,
            best_reward: self.best.as_ref().map_or(f64::NEG_INFINITY, |b| b.1),
            beta_e: 0.0,
            loss_u: 0.0,
            loss_kl: 0.0,
            loss_e: 0.0,
            anomaly_count: self.window_anomalies,
        };
        self.window_sum = 0.0;
        self.window_count = 0;
        self.window_anomalies = 0;
        row
    }
}

/// Runs the GA until `cfg.max_evaluations` designs were evaluated.
///
/// A trace row is emitted after the initial population and after every
/// `population_size` children. Anomalous designs score one below the worst
/// reward seen so far.
pub fn run_ga<E: Environment + ?Sized>(env: &mut E, weights: &ObjectiveWeights, cfg: &GaConfig) -> core::result::Result<GaOutcome, RunAbort> {
    let abort = |error| RunAbort { error, trace: RunTrace::new() };
    cfg.validate().map_err(abort)?;
    if weights.is_empty() {
        return Err(abort(Error::config("GA needs at least one objective weight")));
    }
    let space = env.space().clone();
    let cards = space.cardinalities();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let params = MutationParams::from(cfg);
    let mut run = GaRun {
        env,
        weights,
        evaluations: 0,
        best: None,
        worst_seen: None,
        window_sum: 0.0,
        window_count: 0,
        window_anomalies: 0,
    };
    let mut trace = RunTrace::new();
    let mut stats: Vec<OperatorStats> = cfg.operators.iter().map(|_| OperatorStats::default()).collect();

    let mut population: Vec<(DesignPoint, f64)> = Vec::with_capacity(cfg.population_size);
    while population.len() < cfg.population_size && run.evaluations < cfg.max_evaluations {
        let d = DesignPoint(cards.iter().map(|&c| rng.random_range(0..c)).collect());
        match run.score(&d) {
            Ok(r) => population.push((d, r)),
            Err(error) => return Err(run.abort(error, 0, &population, trace)),
        }
    }
    let mut generation = 0;
    trace.push(run.row(generation, &population));

    let mut since_row = 0;
    while run.evaluations < cfg.max_evaluations {
        let k = pick_operator(&stats, cfg.bandit_epsilon, &mut rng);
        let op = cfg.operators[k];
        let best_idx = argmax(&population);
        let parents: Vec<&DesignPoint> = match op {
            Operator::DiffEvolution => {
                let others: Vec<usize> = (0..population.len()).filter(|&i| i != best_idx).collect();
                let mut pick = others.choose_multiple(&mut rng, 2).copied();
                let b = pick.next().unwrap_or(best_idx);
                let c = pick.next().unwrap_or(b);
                [best_idx, b, c].iter().map(|&i| &population[i].0).collect()
            }
            _ => alloc::vec![&population[best_idx].0],
        };
        let child = mutate(&space, &parents, op, params, &mut rng);
        let reward = match run.score(&child) {
            Ok(r) => r,
            Err(error) => return Err(run.abort(error, generation + 1, &population, trace)),
        };

        let worst_idx = argmin(&population);
        let improvement = reward - population[worst_idx].1;
        stats[k].uses += 1;
        if improvement > 0.0 {
            stats[k].credit += improvement;
            population[worst_idx] = (child, reward);
        }

        since_row += 1;
        if since_row == cfg.population_size || run.evaluations == cfg.max_evaluations {
            generation += 1;
            trace.push(run.row(generation, &population));
            since_row = 0;
        }
    }
    let (best_design, best_reward) = match run.best {
        Some((d, r)) => (Some(d), r),
        None => (None, f64::NEG_INFINITY),
    };
    Ok(GaOutcome {
        trace,
        best_design,
        best_reward,
        evaluations: run.evaluations,
        operator_stats: cfg.operators.iter().copied().zip(stats).collect(),
    })
}

fn argmax(pop: &[(DesignPoint, f64)]) -> usize {
    (0..pop.len()).fold(0, |b, i| if pop[i].1 > pop[b].1 { i } else { b })
}

fn argmin(pop: &[(DesignPoint, f64)]) -> usize {
    (0..pop.len()).fold(0, |b, i| if pop[i].1 < pop[b].1 { i } else { b })
}

/// Epsilon-greedy over mean credit; untried operators go first.
fn pick_operator<R: Rng + ?Sized>(stats: &[OperatorStats], epsilon: f64, rng: &mut R) -> usize {
    if let Some(i) = stats.iter().position(|s| s.uses == 0) {
        return i;
    }
    if rng.random::<f64>() < epsilon {
        return rng.random_range(0..stats.len());
    }
    let mean = |s: &OperatorStats| s.credit / s.uses as f64;
    (0..stats.len()).fold(0, |b, i| if mean(&stats[i]) > mean(&stats[b]) { i } else { b })
}
