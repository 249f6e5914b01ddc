//! The policy improvement cycle.
//!
//! Each cycle snapshots the policy, samples a batch of complete designs,
//! scores them, replaces rejected designs' rewards with a dynamic anomaly
//! reward, refreshes the running-reward baseline, and then takes
//! `epochs x (batch / minibatch)` Adam steps on the proximal surrogate
//! before decaying the entropy coefficient.

mod formulas;
mod loss;
mod trainer;

pub use formulas::{
    advantages, anomaly_reward, decay_entropy_beta, update_running_reward, weighted_reward, AnomalyReward, MissingObjective,
    ObjectiveWeights,
};
pub use loss::{surrogate_loss, vanilla_policy_gradient_loss, LossTerms, LossWeights, Minibatch, LOG_RATIO_CLAMP};
pub use trainer::{train, CycleReport, RunningState, SampleBatch, TrainOutcome, Trainer};

use serde::{Deserialize, Serialize};

use crate::policy::AlphaMode;
use crate::{Error, Result};

/// Every tunable of the engine.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HyperParams {
    pub objective_weights: ObjectiveWeights,
    pub alpha_renew: f64,
    pub beta_kl: f64,
    pub beta_e0: f64,
    pub beta_min: f64,
    pub r_decay: f64,
    pub alpha_anomaly: f64,
    pub batch_size: usize,
    pub minibatch_size: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub alpha_mode: AlphaMode,
    pub max_evaluations: u64,
}

impl Default for HyperParams {
    fn default() -> Self {
        Self {
            objective_weights: ObjectiveWeights::default(),
            alpha_renew: 0.3,
            beta_kl: 1.0,
            beta_e0: 0.05,
            beta_min: 0.0,
            r_decay: 0.999,
            alpha_anomaly: 0.1,
            batch_size: 8,
            minibatch_size: 8,
            epochs: 4,
            learning_rate: 3e-4,
            alpha_mode: AlphaMode::UniformOne,
            max_evaluations: 10_000,
        }
    }
}

impl HyperParams {
    pub fn with_weights(mut self, weights: ObjectiveWeights) -> Self {
        self.objective_weights = weights;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::config(alloc::format!("hyperparameters: {m}")));
        let finite_nonneg = |x: f64| x.is_finite() && x >= 0.0;
        if self.objective_weights.is_empty() {
            return fail("at least one objective weight is required");
        }
        if self.objective_weights.iter().any(|(_, w)| !w.is_finite()) {
            return fail("objective weights must be finite");
        }
        if !(self.alpha_renew > 0.0 && self.alpha_renew <= 1.0) {
            return fail("alpha_renew must be in (0, 1]");
        }
        if !(self.r_decay > 0.0 && self.r_decay <= 1.0) {
            return fail("r_decay must be in (0, 1]");
        }
        if ![self.beta_kl, self.beta_e0, self.beta_min, self.alpha_anomaly]
            .into_iter()
            .all(finite_nonneg)
        {
            return fail("beta_kl, beta_e0, beta_min and alpha_anomaly must be finite and non-negative");
        }
        if self.beta_min > self.beta_e0 {
            return fail("beta_min must not exceed beta_e0");
        }
        if self.batch_size == 0 || self.minibatch_size == 0 || self.epochs == 0 {
            return fail("batch_size, minibatch_size and epochs must be positive");
        }
        if self.minibatch_size > self.batch_size || !self.batch_size.is_multiple_of(self.minibatch_size) {
            return fail("minibatch_size must divide batch_size");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return fail("learning_rate must be positive");
        }
        if self.max_evaluations == 0 {
            return fail("max_evaluations must be positive");
        }
        Ok(())
    }
}
