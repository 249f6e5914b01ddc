use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Result};

/// Dense row-major tensor of `f64` values with an optional gradient buffer.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    values: Vec<f64>,
    requires_grad: bool,
    grad: Option<Vec<f64>>,
}

impl Tensor {
    pub fn new(shape: &[usize], values: Vec<f64>) -> Result<Self> {
        if shape.is_empty() || shape.contains(&0) {
            return Err(Error::config(alloc::format!("invalid tensor shape {shape:?}")));
        }
        let numel: usize = shape.iter().product();
        if numel != values.len() {
            return Err(Error::config(alloc::format!(
                "shape {shape:?} needs {numel} values, got {}",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::numeric("non-finite tensor value"));
        }
        Ok(Self {
            shape: shape.to_vec(),
            values,
            requires_grad: false,
            grad: None,
        })
    }

    pub fn zeros(shape: &[usize]) -> Result<Self> {
        Self::filled(shape, 0.0)
    }

    pub fn filled(shape: &[usize], value: f64) -> Result<Self> {
        let numel = shape.iter().product();
        Self::new(shape, vec![value; numel])
    }

    pub fn vector(values: Vec<f64>) -> Result<Self> {
        let n = values.len();
        Self::new(&[n], values)
    }

    /// Marks the tensor as trainable.
    pub fn requiring_grad(mut self) -> Self {
        self.requires_grad = true;
        self
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn requires_grad(&self) -> bool {
        self.requires_grad
    }

    pub fn grad(&self) -> Option<&[f64]> {
        self.grad.as_deref()
    }

    pub(crate) fn values_and_grad_mut(&mut self) -> (&mut [f64], Option<&mut [f64]>) {
        (&mut self.values, self.grad.as_deref_mut())
    }

    pub fn zero_grad(&mut self) {
        match &mut self.grad {
            Some(g) => g.iter_mut().for_each(|v| *v = 0.0),
            None => self.grad = Some(vec![0.0; self.values.len()]),
        }
    }

    pub fn clear_grad(&mut self) {
        self.grad = None;
    }

    /// Adds `g` into the gradient buffer, allocating it on first use.
    pub fn accumulate_grad(&mut self, g: &[f64]) -> Result<()> {
        if g.len() != self.values.len() {
            return Err(Error::usage("gradient length does not match tensor"));
        }
        if g.iter().any(|v| !v.is_finite()) {
            return Err(Error::numeric("non-finite gradient"));
        }
        let buf = self.grad.get_or_insert_with(|| vec![0.0; g.len()]);
        for (b, v) in buf.iter_mut().zip(g) {
            *b += v;
        }
        Ok(())
    }
}

/// Named trainable tensors in registration order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParamSet {
    names: Vec<String>,
    tensors: Vec<Tensor>,
}

impl ParamSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registers a tensor and returns its slot index.
    pub fn register(&mut self, name: impl Into<String>, tensor: Tensor) -> Result<usize> {
        let name = name.into();
        if self.names.contains(&name) {
            return Err(Error::config(alloc::format!("duplicate parameter name '{name}'")));
        }
        self.names.push(name);
        self.tensors.push(tensor.requiring_grad());
        Ok(self.tensors.len() - 1)
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    pub fn get(&self, slot: usize) -> &Tensor {
        &self.tensors[slot]
    }

    pub fn get_mut(&mut self, slot: usize) -> &mut Tensor {
        &mut self.tensors[slot]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Tensor)> {
        self.names.iter().map(String::as_str).zip(self.tensors.iter())
    }

    pub fn tensors_mut(&mut self) -> &mut [Tensor] {
        &mut self.tensors
    }

    /// Total number of scalar parameters.
    pub fn numel(&self) -> usize {
        self.tensors.iter().map(Tensor::len).sum()
    }

    /// All values concatenated in registration order.
    pub fn flat_values(&self) -> Vec<f64> {
        self.tensors.iter().flat_map(|t| t.values().iter().copied()).collect()
    }

    /// Overwrites all values from a flat buffer in registration order.
    pub fn load_flat(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.numel() {
            return Err(Error::config(alloc::format!(
                "expected {} parameter values, got {}",
                self.numel(),
                flat.len()
            )));
        }
        if flat.iter().any(|v| !v.is_finite()) {
            return Err(Error::numeric("non-finite parameter value"));
        }
        let mut at = 0;
        for t in &mut self.tensors {
            let n = t.len();
            t.values_mut().copy_from_slice(&flat[at..at + n]);
            at += n;
        }
        Ok(())
    }

    pub fn zero_grads(&mut self) {
        self.tensors.iter_mut().for_each(Tensor::zero_grad);
    }

    /// Adds the gradients computed for `vars` (as returned by
    /// [`Graph::bind`](super::Graph::bind)) onto the tensors.
    pub fn accumulate(&mut self, vars: &[super::Var], grads: &super::Gradients) -> Result<()> {
        if vars.len() != self.tensors.len() {
            return Err(Error::usage("bound variables do not match parameter set"));
        }
        for (t, v) in self.tensors.iter_mut().zip(vars) {
            match grads.wrt(*v) {
                Some(g) => t.accumulate_grad(g)?,
                None => {
                    // Unreachable from the loss: contributes a zero gradient.
                    if t.grad.is_none() {
                        t.zero_grad();
                    }
                }
            }
        }
        Ok(())
    }
}
