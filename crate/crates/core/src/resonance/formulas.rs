//! Reward shaping and schedule formulas used by each improvement cycle.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::envs::Objectives;

/// Weights `w_j` of the weighted-sum reward. Larger rewards are better, so
/// penalties take negative weights (or arrive as negative metrics).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ObjectiveWeights(pub BTreeMap<String, f64>);

impl ObjectiveWeights {
    pub fn single(name: &str, weight: f64) -> Self {
        let mut m = BTreeMap::new();
        m.insert(name.into(), weight);
        Self(m)
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.0.iter().map(|(k, v)| (k.as_str(), *v))
    }
}

/// A weighted objective was absent from an evaluation result.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("objective '{0}' missing from evaluation result")]
pub struct MissingObjective(pub String);

/// `R = sum_j w_j * O_j`.
pub fn weighted_reward(objectives: &Objectives, weights: &ObjectiveWeights) -> Result<f64, MissingObjective> {
    weights.iter().try_fold(0.0, |acc, (name, w)| match objectives.get(name) {
        Some(o) => Ok(acc + w * o),
        None => Err(MissingObjective(name.into())),
    })
}

/// Exponential moving average of batch-mean rewards.
pub fn update_running_reward(running: f64, batch_mean: f64, alpha_renew: f64) -> f64 {
    alpha_renew * batch_mean + (1.0 - alpha_renew) * running
}

/// `A_b = R_b - running`.
pub fn advantages(rewards: &[f64], running: f64) -> Vec<f64> {
    rewards.iter().map(|r| r - running).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnomalyReward {
    pub value: f64,
    /// Set when no sample of the batch succeeded and the fallback rule applied.
    pub fallback: bool,
}

/// Reward assigned to designs the evaluator rejected:
/// `min(mean - a*|mean|, running - a*|mean|)` over the successful rewards of
/// the batch. With no successful sample the value is
/// `running - a*max(|running|, 1)`.
pub fn anomaly_reward(ok_rewards: &[f64], running: f64, alpha_anomaly: f64) -> AnomalyReward {
    if ok_rewards.is_empty() {
        return AnomalyReward {
            value: running - alpha_anomaly * running.abs().max(1.0),
            fallback: true,
        };
    }
    let mean = ok_rewards.iter().sum::<f64>() / ok_rewards.len() as f64;
    let penalty = alpha_anomaly * mean.abs();
    AnomalyReward {
        value: (mean - penalty).min(running - penalty),
        fallback: false,
    }
}

/// `beta_e <- max(beta_min, beta_e * r_decay)`.
pub fn decay_entropy_beta(beta_e: f64, beta_min: f64, r_decay: f64) -> f64 {
    beta_min.max(beta_e * r_decay)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn objs(pairs: &[(&str, f64)]) -> Objectives {
        pairs.iter().map(|(k, v)| (String::from(*k), *v)).collect()
    }

    fn weights(pairs: &[(&str, f64)]) -> ObjectiveWeights {
        ObjectiveWeights(pairs.iter().map(|(k, v)| (String::from(*k), *v)).collect())
    }

    #[test]
    fn weighted_sums() {
        assert_eq!(weighted_reward(&objs(&[("latency", 42.0)]), &weights(&[("latency", -1.0)])), Ok(-42.0));
        assert_eq!(weighted_reward(&objs(&[("a", 10.0), ("b", -10.0)]), &weights(&[("a", 0.5), ("b", 0.5)])), Ok(0.0));
        assert_eq!(weighted_reward(&objs(&[("a", 1.5), ("b", -0.5)]), &weights(&[("a", 2.0), ("b", 3.0)])), Ok(1.5));
        assert_eq!(
            weighted_reward(&objs(&[("a", 1.0)]), &weights(&[("a", 1.0), ("power", 1.0)])),
            Err(MissingObjective("power".into()))
        );
    }

    #[test]
    fn running_reward_cases() {
        assert_eq!(update_running_reward(-55.0, 4.0, 1.0), 4.0);
        assert_eq!(update_running_reward(2.0, 4.0, 0.5), 3.0);
        let mut r = 1.0;
        let mut seen = vec![];
        for m in [1.0, 2.0, 3.0] {
            r = update_running_reward(r, m, 0.1);
            seen.push(r);
        }
        // one-line EMA: r = 0.1 m + 0.9 r
        let oracle = [1.0, 0.1 * 2.0 + 0.9 * 1.0, 0.1 * 3.0 + 0.9 * (0.1 * 2.0 + 0.9)];
        for (a, b) in seen.iter().zip(oracle) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!((seen[1] - 1.1).abs() < 1e-12);
        assert!((seen[2] - 1.29).abs() < 1e-12);
    }

    #[test]
    fn advantage_cases() {
        assert_eq!(advantages(&[3.0], 3.0), vec![0.0]);
        assert_eq!(advantages(&[5.0, 1.0], 3.0), vec![2.0, -2.0]);
        let a = advantages(&[2.0; 4], 5.0);
        assert!(a.iter().all(|x| *x == -3.0));
    }

    #[test]
    fn anomaly_cases() {
        assert_eq!(anomaly_reward(&[10.0], 10.0, 0.5).value, 5.0);
        assert_eq!(anomaly_reward(&[-4.0], 0.0, 1.0).value, -8.0);
        assert_eq!(anomaly_reward(&[7.0], 3.0, 0.0).value, 3.0);
        let fb = anomaly_reward(&[], 0.5, 0.1);
        assert!(fb.fallback);
        assert_eq!(fb.value, 0.5 - 0.1);
    }

    #[test]
    fn entropy_decay_cases() {
        assert_eq!(decay_entropy_beta(0.02, 0.01, 0.5), 0.01);
        assert_eq!(decay_entropy_beta(0.3, 0.0, 1.0), 0.3);
        let mut b = 1.0;
        for t in 1..=50 {
            b = decay_entropy_beta(b, 0.0, 0.9);
            assert!((b - libm::pow(0.9, t as f64)).abs() < 1e-12);
        }
    }
}
