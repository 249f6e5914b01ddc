use alloc::vec;
use alloc::vec::Vec;

use super::ParamSet;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

impl AdamConfig {
    pub fn with_learning_rate(learning_rate: f64) -> Self {
        Self {
            learning_rate,
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = self.learning_rate > 0.0
            && self.learning_rate.is_finite()
            && self.beta1 > 0.0
            && self.beta1 < 1.0
            && self.beta2 > 0.0
            && self.beta2 < 1.0
            && self.epsilon > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::config(alloc::format!("invalid Adam settings {self:?}")))
        }
    }
}

/// Adam with bias-corrected moment estimates.
#[derive(Debug, Clone)]
pub struct Adam {
    config: AdamConfig,
    first_moment: Vec<Vec<f64>>,
    second_moment: Vec<Vec<f64>>,
    step_count: u64,
}

impl Adam {
    pub fn new(params: &ParamSet, config: AdamConfig) -> Result<Self> {
        config.validate()?;
        let zeros = |t: &super::Tensor| vec![0.0; t.len()];
        Ok(Self {
            config,
            first_moment: params.iter().map(|(_, t)| zeros(t)).collect(),
            second_moment: params.iter().map(|(_, t)| zeros(t)).collect(),
            step_count: 0,
        })
    }

    pub fn config(&self) -> &AdamConfig {
        &self.config
    }

    pub fn step_count(&self) -> u64 {
        self.step_count
    }

    /// Applies one update from the accumulated gradients, then zeroes them.
    pub fn step(&mut self, params: &mut ParamSet) -> Result<()> {
        if params.len() != self.first_moment.len() {
            return Err(Error::usage("optimizer state does not match parameter set"));
        }
        for (t, m) in params.iter().zip(&self.first_moment) {
            match t.1.grad() {
                Some(g) if g.len() == m.len() => {}
                Some(_) => return Err(Error::usage(alloc::format!("gradient shape changed for '{}'", t.0))),
                None => return Err(Error::usage(alloc::format!("parameter '{}' has no gradient", t.0))),
            }
        }
        self.step_count += 1;
        let AdamConfig {
            learning_rate,
            beta1,
            beta2,
            epsilon,
        } = self.config;
        let t = self.step_count as i32;
        let bc1 = 1.0 - libm::pow(beta1, t as f64);
        let bc2 = 1.0 - libm::pow(beta2, t as f64);
        let step_size = learning_rate / bc1;
        let inv_sqrt_bc2 = 1.0 / libm::sqrt(bc2);
        for ((tensor, m), v) in params
            .tensors_mut()
            .iter_mut()
            .zip(&mut self.first_moment)
            .zip(&mut self.second_moment)
        {
            let (values, grad) = tensor.values_and_grad_mut();
            let grad = grad.expect("checked above");
            for (((x, g), m), v) in values.iter_mut().zip(grad.iter()).zip(m.iter_mut()).zip(v.iter_mut()) {
                *m = beta1 * *m + (1.0 - beta1) * g;
                *v = beta2 * *v + (1.0 - beta2) * g * g;
                *x -= step_size * *m / (libm::sqrt(*v) * inv_sqrt_bc2 + epsilon);
            }
            if tensor.values().iter().any(|x| !x.is_finite()) {
                return Err(Error::numeric("non-finite parameter after Adam step"));
            }
            tensor.zero_grad();
        }
        Ok(())
    }
}
