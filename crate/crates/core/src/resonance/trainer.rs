use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::formulas::{advantages, anomaly_reward, decay_entropy_beta, update_running_reward, weighted_reward};
use super::loss::{joint_old_log_probs, surrogate_loss, LossTerms, LossWeights, Minibatch};
use super::HyperParams;
use crate::diff::{Adam, AdamConfig, Graph};
use crate::envs::{Environment, EvalResult, Objectives};
use crate::policy::{PolicyNet, PolicyValues};
use crate::space::DesignPoint;
use crate::trace::{RunAbort, RunTrace, TraceRow};
use crate::{Error, Result};

/// Offset separating the sampling stream from the initialization stream.
const SAMPLING_STREAM: u64 = 0x9E37_79B9_7F4A_7C15;

#[derive(Debug, Clone, PartialEq)]
pub struct RunningState {
    /// Running reward; `None` until the first batch has been scored.
    pub running_reward: Option<f64>,
    pub beta_e: f64,
    pub cycle_index: u64,
    pub best_reward: f64,
    pub best_design: Option<DesignPoint>,
    pub evaluations_used: u64,
}

/// One scored batch.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleBatch {
    pub designs: Vec<DesignPoint>,
    /// `None` for anomalies.
    pub objectives: Vec<Option<Objectives>>,
    pub rewards: Vec<f64>,
    pub anomaly_flags: Vec<bool>,
    /// Per-dimension `log f_i(x_i)` under the snapshot policy.
    pub old_log_probs: Vec<Vec<f64>>,
}

/// What happened in one improvement cycle.
#[derive(Debug, Clone, PartialEq)]
pub struct CycleReport {
    pub batch: SampleBatch,
    pub advantages: Vec<f64>,
    /// Reward given to anomalies, if any occurred.
    pub anomaly_reward: Option<f64>,
    /// Running reward after this cycle's update.
    pub running_reward: f64,
    /// Mean loss terms over this cycle's gradient steps.
    pub losses: LossTerms,
    pub row: TraceRow,
}

/// Owns the network, optimizer and running state of one training run.
pub struct Trainer {
    net: PolicyNet,
    hp: HyperParams,
    adam: Adam,
    rng: ChaCha8Rng,
    alphas: Vec<f64>,
    state: RunningState,
    trace: RunTrace,
    warnings: Vec<String>,
}

impl Trainer {
    pub fn new(net: PolicyNet, hp: HyperParams, seed: u64) -> Result<Self> {
        hp.validate()?;
        let adam = Adam::new(net.params(), AdamConfig::with_learning_rate(hp.learning_rate))?;
        let cards: Vec<usize> = net.layout().segments().iter().map(|s| s.1).collect();
        let alphas = hp.alpha_mode.weights(&cards);
        let state = RunningState {
            running_reward: None,
            beta_e: hp.beta_e0,
            cycle_index: 0,
            best_reward: f64::NEG_INFINITY,
            best_design: None,
            evaluations_used: 0,
        };
        Ok(Self {
            net,
            hp,
            adam,
            rng: ChaCha8Rng::seed_from_u64(seed.wrapping_add(SAMPLING_STREAM)),
            alphas,
            state,
            trace: RunTrace::new(),
            warnings: Vec::new(),
        })
    }

    pub fn net(&self) -> &PolicyNet {
        &self.net
    }

    pub fn into_net(self) -> PolicyNet {
        self.net
    }

    pub fn hyper_params(&self) -> &HyperParams {
        &self.hp
    }

    pub fn state(&self) -> &RunningState {
        &self.state
    }

    pub fn trace(&self) -> &RunTrace {
        &self.trace
    }

    /// Non-fatal conditions, e.g. batches in which every sample was anomalous.
    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    pub fn is_done(&self) -> bool {
        self.state.evaluations_used >= self.hp.max_evaluations
    }

    /// Current policy distributions.
    pub fn policy(&self) -> Result<PolicyValues> {
        self.net.policy_values()
    }

    /// Runs cycles until the evaluation budget is spent.
    pub fn run<E: Environment + ?Sized>(&mut self, env: &mut E) -> Result<()> {
        while !self.is_done() {
            self.cycle(env)?;
        }
        Ok(())
    }

    /// One improvement cycle. The last batch of a run is truncated so the
    /// evaluation budget is never exceeded.
    pub fn cycle<E: Environment + ?Sized>(&mut self, env: &mut E) -> Result<CycleReport> {
        let remaining = self.hp.max_evaluations.saturating_sub(self.state.evaluations_used);
        if remaining == 0 {
            return Err(Error::usage("evaluation budget exhausted"));
        }
        if self.state.cycle_index == 0 && env.space().hash_hex() != self.net.space_hash() {
            return Err(Error::usage("environment space does not match the policy network"));
        }
        let b = (self.hp.batch_size as u64).min(remaining) as usize;

        let snapshot = self.net.policy_values()?;
        let designs = snapshot.sample(b, &mut self.rng);
        let old_log_probs: Vec<Vec<f64>> = designs.iter().map(|d| snapshot.per_dim_log_probs(d)).collect();

        let results = env.evaluate_batch(&designs)?;
        if results.len() != designs.len() {
            return Err(Error::Environment(format!(
                "environment returned {} results for {} designs",
                results.len(),
                designs.len()
            )));
        }
        self.state.evaluations_used += b as u64;

        let mut rewards = Vec::with_capacity(b);
        let mut objectives = Vec::with_capacity(b);
        for (design, res) in designs.iter().zip(results) {
            let scored = match res {
                EvalResult::Objectives(o) => match weighted_reward(&o, &self.hp.objective_weights) {
                    Ok(r) if r.is_finite() => Some((r, o)),
                    _ => None,
                },
                EvalResult::Anomaly(_) => None,
            };
            match scored {
                Some((r, o)) => {
                    if r > self.state.best_reward {
                        self.state.best_reward = r;
                        self.state.best_design = Some(design.clone());
                    }
                    rewards.push(Some(r));
                    objectives.push(Some(o));
                }
                None => {
                    rewards.push(None);
                    objectives.push(None);
                }
            }
        }
        let ok: Vec<f64> = rewards.iter().flatten().copied().collect();
        let anomaly_flags: Vec<bool> = rewards.iter().map(Option::is_none).collect();
        let anomaly_count = anomaly_flags.iter().filter(|a| **a).count();

        let mut ra = None;
        if anomaly_count > 0 {
            // Before the first update the baseline is bootstrapped from this batch.
            let baseline = self
                .state
                .running_reward
                .unwrap_or_else(|| if ok.is_empty() { 0.0 } else { ok.iter().sum::<f64>() / ok.len() as f64 });
            let a = anomaly_reward(&ok, baseline, self.hp.alpha_anomaly);
            if a.fallback {
                self.warnings.push(format!(
                    "cycle {}: every sample was anomalous; assigned fallback reward {}",
                    self.state.cycle_index, a.value
                ));
            }
            ra = Some(a.value);
        }
        let rewards: Vec<f64> = rewards.iter().map(|r| r.unwrap_or_else(|| ra.expect("set when anomalies exist"))).collect();
        let batch_mean = rewards.iter().sum::<f64>() / b as f64;

        let running = match self.state.running_reward {
            None => batch_mean,
            Some(r) => update_running_reward(r, batch_mean, self.hp.alpha_renew),
        };
        self.state.running_reward = Some(running);
        let adv = advantages(&rewards, running);

        let losses = self.update(&snapshot, &designs, &adv)?;

        self.state.beta_e = decay_entropy_beta(self.state.beta_e, self.hp.beta_min, self.hp.r_decay);
        let row = TraceRow {
            cycle: self.state.cycle_index,
            evaluations: self.state.evaluations_used,
            batch_mean_reward: batch_mean,
            running_reward: running,
            best_reward: self.state.best_reward,
            beta_e: self.state.beta_e,
            loss_u: losses.update,
            loss_kl: losses.kl,
            loss_e: losses.entropy,
            anomaly_count: anomaly_count as u64,
        };
        self.trace.push(row);
        self.state.cycle_index += 1;

        Ok(CycleReport {
            batch: SampleBatch {
                designs,
                objectives,
                rewards,
                anomaly_flags,
                old_log_probs,
            },
            advantages: adv,
            anomaly_reward: ra,
            running_reward: running,
            losses,
            row,
        })
    }

    fn update(&mut self, snapshot: &PolicyValues, designs: &[DesignPoint], adv: &[f64]) -> Result<LossTerms> {
        let old_joint = joint_old_log_probs(snapshot, designs);
        let mut order: Vec<usize> = (0..designs.len()).collect();
        let mut sum = LossTerms::default();
        let mut steps = 0usize;
        let weights = LossWeights {
            beta_kl: self.hp.beta_kl,
            beta_e: self.state.beta_e,
            alphas: &self.alphas,
        };
        for _ in 0..self.hp.epochs {
            order.shuffle(&mut self.rng);
            for chunk in order.chunks(self.hp.minibatch_size) {
                let mb_designs: Vec<DesignPoint> = chunk.iter().map(|&i| designs[i].clone()).collect();
                let mb_old: Vec<f64> = chunk.iter().map(|&i| old_joint[i]).collect();
                let mb_adv: Vec<f64> = chunk.iter().map(|&i| adv[i]).collect();
                let mut g = Graph::new();
                let (out, bound) = self.net.forward(&mut g)?;
                let batch = Minibatch {
                    designs: &mb_designs,
                    old_log_probs: &mb_old,
                    advantages: &mb_adv,
                };
                let (loss, terms) = surrogate_loss(&mut g, &out, snapshot, batch, weights)?;
                let grads = g.backward(loss)?;
                self.net.params_mut().accumulate(&bound, &grads)?;
                self.adam.step(self.net.params_mut())?;
                sum.update += terms.update;
                sum.kl += terms.kl;
                sum.entropy += terms.entropy;
                sum.total += terms.total;
                steps += 1;
            }
        }
        let n = steps as f64;
        Ok(LossTerms {
            update: sum.update / n,
            kl: sum.kl / n,
            entropy: sum.entropy / n,
            total: sum.total / n,
        })
    }
}

/// Result of a completed [`train`] run.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub trace: RunTrace,
    pub best_design: Option<DesignPoint>,
    pub best_reward: f64,
    pub evaluations: u64,
    pub net: PolicyNet,
    pub warnings: Vec<String>,
}

/// Trains `net` against `env` until `hp.max_evaluations` designs were scored.
pub fn train<E: Environment + ?Sized>(net: PolicyNet, env: &mut E, hp: HyperParams, seed: u64) -> core::result::Result<TrainOutcome, RunAbort> {
    let mut trainer = Trainer::new(net, hp, seed).map_err(|error| RunAbort {
        error,
        trace: RunTrace::new(),
    })?;
    if let Err(error) = trainer.run(env) {
        return Err(RunAbort {
            error,
            trace: trainer.trace.clone(),
        });
    }
    let Trainer { net, state, trace, warnings, .. } = trainer;
    Ok(TrainOutcome {
        evaluations: state.evaluations_used,
        best_reward: state.best_reward,
        best_design: state.best_design,
        trace,
        net,
        warnings,
    })
}
