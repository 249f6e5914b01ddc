use alloc::vec::Vec;

use crate::diff::{Graph, Var};
use crate::policy::{PolicyOutput, PolicyValues};
use crate::space::DesignPoint;
use crate::{Error, Result};

/// Log-ratio clamp; `exp(30)` is the largest importance ratio used.
pub const LOG_RATIO_CLAMP: f64 = 30.0;

/// Samples taking part in one gradient step.
#[derive(Debug, Clone, Copy)]
pub struct Minibatch<'a> {
    pub designs: &'a [DesignPoint],
    /// Joint log-probability of each design under the snapshot policy.
    pub old_log_probs: &'a [f64],
    pub advantages: &'a [f64],
}

/// Scalar values of the loss terms, for reporting.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LossTerms {
    pub update: f64,
    pub kl: f64,
    pub entropy: f64,
    pub total: f64,
}

/// Coefficients of the regularizers.
#[derive(Debug, Clone, Copy)]
pub struct LossWeights<'a> {
    pub beta_kl: f64,
    pub beta_e: f64,
    pub alphas: &'a [f64],
}

/// Total risk `L_u + L_e + L_KL` for one minibatch.
///
/// * `L_u  = -mean_b[ exp(log pi(x_b) - log pi_old(x_b)) * A_b ]`
/// * `L_KL = beta_kl * sum_i KL(f_i || f_i_old)`
/// * `L_e  = -beta_e * sum_i alpha_i H(f_i)`
///
/// Advantages and snapshot log-probabilities are constants.
pub fn surrogate_loss(
    g: &mut Graph,
    out: &PolicyOutput,
    old: &PolicyValues,
    batch: Minibatch<'_>,
    w: LossWeights<'_>,
) -> Result<(Var, LossTerms)> {
    let n = batch.designs.len();
    if n == 0 || batch.old_log_probs.len() != n || batch.advantages.len() != n {
        return Err(Error::usage("minibatch must be non-empty with one log-prob and advantage per design"));
    }
    let new_lp = out.log_probs_batch(g, batch.designs)?;
    let old_lp = g.constant(&[n], batch.old_log_probs.to_vec())?;
    let log_ratio = g.sub(new_lp, old_lp)?;
    let log_ratio = g.clamp(log_ratio, -LOG_RATIO_CLAMP, LOG_RATIO_CLAMP)?;
    let ratio = g.exp(log_ratio)?;
    let adv = g.constant(&[n], batch.advantages.to_vec())?;
    let weighted = g.mul(ratio, adv)?;
    let mean = g.mean(weighted)?;
    let l_u = g.neg(mean)?;

    let kl_terms = out.kl_rev_terms(g, old)?;
    let kl_sum = g.sum(kl_terms)?;
    let l_kl = g.scale(kl_sum, w.beta_kl)?;

    let h_terms = out.entropy_terms(g, w.alphas)?;
    let h_sum = g.sum(h_terms)?;
    let l_e = g.scale(h_sum, -w.beta_e)?;

    let partial = g.add(l_u, l_kl)?;
    let total = g.add(partial, l_e)?;
    let terms = LossTerms {
        update: g.scalar(l_u),
        kl: g.scalar(l_kl),
        entropy: g.scalar(l_e),
        total: g.scalar(total),
    };
    Ok((total, terms))
}

/// Reference form `-mean_b[A_b * log pi(x_b)]`; its gradient equals that of
/// the update loss when the policy equals the snapshot.
pub fn vanilla_policy_gradient_loss(g: &mut Graph, out: &PolicyOutput, designs: &[DesignPoint], advantages: &[f64]) -> Result<Var> {
    let lp = out.log_probs_batch(g, designs)?;
    let adv = g.constant(&[advantages.len()], advantages.to_vec())?;
    let w = g.mul(lp, adv)?;
    let m = g.mean(w)?;
    g.neg(m)
}

pub(crate) fn joint_old_log_probs(old: &PolicyValues, designs: &[DesignPoint]) -> Vec<f64> {
    designs.iter().map(|d| old.log_prob(d)).collect()
}
