use alloc::format;
use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::diff::{Graph, Var};
use crate::space::{DesignPoint, OutputLayout};
use crate::{Error, Result};

/// Per-dimension weighting of the entropy bonus.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlphaMode {
    /// Every dimension weighted 1.
    #[default]
    UniformOne,
    /// `alpha_i = ln(d_max) / ln(d_i)`; single-choice dimensions get 0.
    LogNormalized,
}

impl AlphaMode {
    pub fn weights(self, cardinalities: &[usize]) -> Vec<f64> {
        match self {
            AlphaMode::UniformOne => cardinalities.iter().map(|_| 1.0).collect(),
            AlphaMode::LogNormalized => {
                let d_max = cardinalities.iter().copied().max().unwrap_or(1);
                cardinalities
                    .iter()
                    .map(|&d| {
                        if d < 2 {
                            0.0
                        } else {
                            libm::log(1.0 / d_max as f64) / libm::log(1.0 / d as f64)
                        }
                    })
                    .collect()
            }
        }
    }
}

/// Differentiable policy: concatenated per-dimension log-probabilities inside a graph.
#[derive(Debug, Clone)]
pub struct PolicyOutput {
    log_probs: Var,
    layout: OutputLayout,
}

impl PolicyOutput {
    pub(crate) fn new(log_probs: Var, layout: OutputLayout) -> Self {
        Self { log_probs, layout }
    }

    /// The `[total_width]` log-probability node.
    pub fn var(&self) -> Var {
        self.log_probs
    }

    pub fn layout(&self) -> &OutputLayout {
        &self.layout
    }

    /// Detached copy of the distributions.
    pub fn values(&self, g: &Graph) -> PolicyValues {
        PolicyValues::from_log_probs(self.layout.clone(), g.value(self.log_probs).to_vec())
    }

    fn check_point(&self, x: &DesignPoint) -> Result<()> {
        let ok = x.len() == self.layout.dims()
            && x.indices().iter().zip(self.layout.segments()).all(|(&i, &(_, l))| i < l);
        if ok {
            Ok(())
        } else {
            Err(Error::usage(format!("design {:?} does not fit the policy layout", x.indices())))
        }
    }

    /// `sum_i log f_i(x_i)` as a scalar node.
    pub fn log_prob(&self, g: &mut Graph, x: &DesignPoint) -> Result<Var> {
        let lp = self.log_probs_batch(g, core::slice::from_ref(x))?;
        g.reshape(lp, &[1])
    }

    /// Joint log-probability of each design, shape `[B]`.
    pub fn log_probs_batch(&self, g: &mut Graph, xs: &[DesignPoint]) -> Result<Var> {
        if xs.is_empty() {
            return Err(Error::usage("empty design batch"));
        }
        let mut idx = Vec::with_capacity(xs.len() * self.layout.dims());
        for x in xs {
            self.check_point(x)?;
            idx.extend(x.indices().iter().enumerate().map(|(i, &c)| self.layout.flat_index(i, c)));
        }
        let picked = g.gather(self.log_probs, &idx)?;
        let picked = g.reshape(picked, &[xs.len(), self.layout.dims()])?;
        g.sum_last(picked)
    }

    /// `alpha_i * H(f_i)` per dimension, in nats, shape `[D]`.
    pub fn entropy_terms(&self, g: &mut Graph, alphas: &[f64]) -> Result<Var> {
        if alphas.len() != self.layout.dims() {
            return Err(Error::usage("one alpha per dimension required"));
        }
        let p = g.exp(self.log_probs)?;
        let plogp = g.mul(p, self.log_probs)?;
        let neg_h = g.segment_sum(plogp, self.layout.segments())?;
        let a = g.constant(&[alphas.len()], alphas.iter().map(|a| -a).collect())?;
        g.mul(neg_h, a)
    }

    /// `D_KL(new_i || old_i)` per dimension, shape `[D]`; `old` is a constant.
    pub fn kl_rev_terms(&self, g: &mut Graph, old: &PolicyValues) -> Result<Var> {
        if old.layout != self.layout {
            return Err(Error::usage("policies over different layouts"));
        }
        let old_lp = g.constant(&[old.log_probs.len()], old.log_probs.clone())?;
        let p = g.exp(self.log_probs)?;
        let diff = g.sub(self.log_probs, old_lp)?;
        let terms = g.mul(p, diff)?;
        g.segment_sum(terms, self.layout.segments())
    }
}

/// Detached per-dimension categorical distributions.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyValues {
    layout: OutputLayout,
    log_probs: Vec<f64>,
    probs: Vec<f64>,
}

impl PolicyValues {
    pub fn from_log_probs(layout: OutputLayout, log_probs: Vec<f64>) -> Self {
        let probs = log_probs.iter().map(|l| libm::exp(*l)).collect();
        Self {
            layout,
            log_probs,
            probs,
        }
    }

    /// Builds a policy from explicit per-dimension probability vectors.
    pub fn from_probs(per_dim: &[Vec<f64>]) -> Result<Self> {
        let cards: Vec<usize> = per_dim.iter().map(Vec::len).collect();
        if cards.is_empty() || cards.contains(&0) {
            return Err(Error::config("every dimension needs at least one probability"));
        }
        for p in per_dim {
            let s: f64 = p.iter().sum();
            if p.iter().any(|x| x.is_nan() || *x < 0.0) || (s - 1.0).abs() > 1e-9 {
                return Err(Error::config(format!("not a probability vector: {p:?}")));
            }
        }
        let probs: Vec<f64> = per_dim.iter().flatten().copied().collect();
        let log_probs = probs.iter().map(|p| libm::log(*p)).collect();
        Ok(Self {
            layout: OutputLayout::from_cardinalities(&cards),
            log_probs,
            probs,
        })
    }

    pub fn layout(&self) -> &OutputLayout {
        &self.layout
    }

    pub fn dims(&self) -> usize {
        self.layout.dims()
    }

    pub fn probs(&self, dim: usize) -> &[f64] {
        let (o, l) = self.layout.segments()[dim];
        &self.probs[o..o + l]
    }

    pub fn log_probs(&self, dim: usize) -> &[f64] {
        let (o, l) = self.layout.segments()[dim];
        &self.log_probs[o..o + l]
    }

    pub fn flat_log_probs(&self) -> &[f64] {
        &self.log_probs
    }

    /// `log f_i(x_i)` for each dimension.
    pub fn per_dim_log_probs(&self, x: &DesignPoint) -> Vec<f64> {
        x.indices()
            .iter()
            .enumerate()
            .map(|(i, &c)| self.log_probs[self.layout.flat_index(i, c)])
            .collect()
    }

    pub fn log_prob(&self, x: &DesignPoint) -> f64 {
        self.per_dim_log_probs(x).iter().sum()
    }

    /// Shannon entropy of each dimension in nats.
    pub fn entropies(&self) -> Vec<f64> {
        (0..self.dims())
            .map(|i| {
                self.probs(i)
                    .iter()
                    .zip(self.log_probs(i))
                    .filter(|(p, _)| **p > 0.0)
                    .map(|(p, l)| -p * l)
                    .sum()
            })
            .collect()
    }

    /// `D_KL(self_i || other_i)` per dimension.
    pub fn kl_to(&self, other: &PolicyValues) -> Vec<f64> {
        (0..self.dims())
            .map(|i| {
                self.probs(i)
                    .iter()
                    .zip(self.log_probs(i))
                    .zip(other.log_probs(i))
                    .filter(|((p, _), _)| **p > 0.0)
                    .map(|((p, l), lo)| p * (l - lo))
                    .sum()
            })
            .collect()
    }

    /// Most probable choice per dimension (lowest index on ties).
    pub fn mode(&self) -> DesignPoint {
        DesignPoint(
            (0..self.dims())
                .map(|i| {
                    let p = self.probs(i);
                    (0..p.len()).fold(0, |best, c| if p[c] > p[best] { c } else { best })
                })
                .collect(),
        )
    }

    pub fn max_probs(&self) -> Vec<f64> {
        (0..self.dims())
            .map(|i| self.probs(i).iter().copied().fold(0.0, f64::max))
            .collect()
    }

    /// Draws `count` designs, each dimension independently from its categorical.
    pub fn sample<R: Rng + ?Sized>(&self, count: usize, rng: &mut R) -> Vec<DesignPoint> {
        (0..count)
            .map(|_| DesignPoint((0..self.dims()).map(|i| sample_categorical(self.probs(i), rng)).collect()))
            .collect()
    }
}

fn sample_categorical<R: Rng + ?Sized>(p: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut last_nonzero = 0;
    for (i, &x) in p.iter().enumerate() {
        if x > 0.0 {
            last_nonzero = i;
        }
        acc += x;
        if u < acc {
            return i;
        }
    }
    // Rounding left the cumulative sum just below 1.
    last_nonzero
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn degenerate_policy_always_samples_its_point() {
        let mut one_hot = vec![0.0; 5];
        one_hot[3] = 1.0;
        let v = PolicyValues::from_probs(&[one_hot.clone(), one_hot.clone(), one_hot]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for x in v.sample(200, &mut rng) {
            assert_eq!(x, DesignPoint(vec![3, 3, 3]));
            assert_eq!(v.log_prob(&x), 0.0);
        }
    }

    #[test]
    fn uniform_binary_frequency() {
        let v = PolicyValues::from_probs(&[vec![0.5, 0.5]]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = v.sample(10_000, &mut rng).iter().filter(|x| x.indices()[0] == 0).count();
        let f = n as f64 / 10_000.0;
        assert!((f - 0.5).abs() < 0.02, "{f}");
    }

    #[test]
    fn sampling_is_seed_deterministic() {
        let v = PolicyValues::from_probs(&[vec![0.2, 0.3, 0.5], vec![0.9, 0.1]]).unwrap();
        let a = v.sample(50, &mut ChaCha8Rng::seed_from_u64(5));
        let b = v.sample(50, &mut ChaCha8Rng::seed_from_u64(5));
        assert_eq!(a, b);
    }

    #[test]
    fn log_prob_of_uniforms() {
        let v = PolicyValues::from_probs(&[vec![0.5; 2], vec![0.25; 4]]).unwrap();
        let lp = v.log_prob(&DesignPoint(vec![1, 2]));
        assert!((lp + libm::log(8.0)).abs() < 1e-15);
    }

    #[test]
    fn entropy_values() {
        let v = PolicyValues::from_probs(&[vec![0.25; 4], vec![0.0, 1.0, 0.0]]).unwrap();
        let h = v.entropies();
        assert!((h[0] - 1.386294).abs() < 1e-6);
        assert_eq!(h[1], 0.0);
    }

    #[test]
    fn alpha_weights() {
        assert_eq!(AlphaMode::UniformOne.weights(&[4, 16]), vec![1.0, 1.0]);
        let a = AlphaMode::LogNormalized.weights(&[4, 16, 1]);
        assert!((a[0] - 2.0).abs() < 1e-12);
        assert!((a[1] - 1.0).abs() < 1e-12);
        assert_eq!(a[2], 0.0);
    }

    #[test]
    fn kl_of_known_pair() {
        let new = PolicyValues::from_probs(&[vec![0.75, 0.25]]).unwrap();
        let old = PolicyValues::from_probs(&[vec![0.5, 0.5]]).unwrap();
        let expect = 0.75 * libm::log(1.5) + 0.25 * libm::log(0.5);
        assert!((new.kl_to(&old)[0] - expect).abs() < 1e-15);
        assert!((expect - 0.130812).abs() < 1e-6);
        assert_eq!(old.kl_to(&old)[0], 0.0);
    }

    #[test]
    fn graph_terms_agree_with_detached_values() {
        let v = PolicyValues::from_probs(&[vec![0.1, 0.6, 0.3], vec![0.5, 0.5]]).unwrap();
        let old = PolicyValues::from_probs(&[vec![0.3, 0.3, 0.4], vec![0.8, 0.2]]).unwrap();
        let mut g = Graph::new();
        let lp = g.constant(&[5], v.flat_log_probs().to_vec()).unwrap();
        let out = PolicyOutput::new(lp, v.layout().clone());
        let h = out.entropy_terms(&mut g, &[1.0, 2.0]).unwrap();
        let kl = out.kl_rev_terms(&mut g, &old).unwrap();
        let he = v.entropies();
        assert!((g.value(h)[0] - he[0]).abs() < 1e-12);
        assert!((g.value(h)[1] - 2.0 * he[1]).abs() < 1e-12);
        for (a, b) in g.value(kl).iter().zip(v.kl_to(&old)) {
            assert!((a - b).abs() < 1e-12);
        }
        let x = DesignPoint(vec![2, 0]);
        let s = out.log_prob(&mut g, &x).unwrap();
        assert!((g.scalar(s) - v.log_prob(&x)).abs() < 1e-15);
    }
}
