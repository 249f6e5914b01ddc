use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::{ParamSet, Tensor};
use crate::{Error, Result};

/// Handle to a node of a [`Graph`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

#[derive(Debug, Clone)]
enum Op {
    Leaf,
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Scale(Var, f64),
    MatMul(Var, Var),
    Transpose(Var),
    Relu(Var),
    Tanh(Var),
    Exp(Var),
    Clamp { x: Var, lo: f64, hi: f64 },
    LayerNorm { x: Var, normed: Vec<f64>, inv_std: Vec<f64> },
    Softmax(Var),
    LogSoftmax(Var),
    Concat(Vec<Var>),
    Slice { x: Var, start: usize },
    Reshape(Var),
    Gather { x: Var, indices: Vec<usize> },
    SegmentSum { x: Var, segments: Vec<(usize, usize)> },
    SumLast(Var),
    Sum(Var),
    Mean(Var),
}

#[derive(Debug, Clone)]
struct Node {
    shape: Vec<usize>,
    value: Vec<f64>,
    op: Op,
    tracked: bool,
}

/// Computation graph recorded during a forward pass.
///
/// Nodes are appended in evaluation order, so reverse insertion order is a
/// valid reverse topological order for [`Graph::backward`].
#[derive(Debug, Clone, Default)]
pub struct Graph {
    nodes: Vec<Node>,
}

/// Gradients of one scalar with respect to every tracked node.
#[derive(Debug, Clone)]
pub struct Gradients {
    grads: Vec<Option<Vec<f64>>>,
}

impl Gradients {
    pub fn wrt(&self, var: Var) -> Option<&[f64]> {
        self.grads.get(var.0).and_then(|g| g.as_deref())
    }
}

fn last_dim(shape: &[usize]) -> usize {
    *shape.last().expect("tensor shapes are never empty")
}

fn rows(shape: &[usize]) -> usize {
    shape[..shape.len() - 1].iter().product()
}

/// Broadcast kind for a binary elementwise op.
fn broadcast(a: &[usize], b: &[usize]) -> Result<bool> {
    if a == b {
        Ok(false)
    } else if b.len() == 1 && b[0] == last_dim(a) {
        Ok(true)
    } else {
        Err(Error::config(format!("cannot broadcast {b:?} onto {a:?}")))
    }
}

fn log_sum_exp(row: &[f64]) -> f64 {
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let s: f64 = row.iter().map(|v| libm::exp(v - max)).sum();
    max + libm::log(s)
}

impl Graph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, shape: Vec<usize>, value: Vec<f64>, op: Op, tracked: bool) -> Result<Var> {
        if value.iter().any(|v| !v.is_finite()) {
            return Err(Error::numeric(format!("non-finite result in {}", op_name(&op))));
        }
        debug_assert_eq!(shape.iter().product::<usize>(), value.len());
        self.nodes.push(Node {
            shape,
            value,
            op,
            tracked,
        });
        Ok(Var(self.nodes.len() - 1))
    }

    fn node(&self, v: Var) -> &Node {
        &self.nodes[v.0]
    }

    pub fn value(&self, v: Var) -> &[f64] {
        &self.nodes[v.0].value
    }

    pub fn shape(&self, v: Var) -> &[usize] {
        &self.nodes[v.0].shape
    }

    /// Scalar value of a one-element node.
    pub fn scalar(&self, v: Var) -> f64 {
        self.nodes[v.0].value[0]
    }

    /// Inserts a tensor as a leaf. It is differentiable iff the tensor
    /// requires a gradient.
    pub fn leaf(&mut self, t: &Tensor) -> Result<Var> {
        self.push(t.shape().to_vec(), t.values().to_vec(), Op::Leaf, t.requires_grad())
    }

    /// Inserts a non-differentiable constant.
    pub fn constant(&mut self, shape: &[usize], values: Vec<f64>) -> Result<Var> {
        let t = Tensor::new(shape, values)?;
        self.push(t.shape().to_vec(), t.values().to_vec(), Op::Leaf, false)
    }

    /// Binds every parameter of `params` as a tracked leaf, in registration order.
    pub fn bind(&mut self, params: &ParamSet) -> Result<Vec<Var>> {
        params.iter().map(|(_, t)| self.leaf(t)).collect()
    }

    fn tracked(&self, vars: &[Var]) -> bool {
        vars.iter().any(|v| self.node(*v).tracked)
    }

    fn elementwise(&mut self, a: Var, b: Var, f: impl Fn(f64, f64) -> f64, op: Op) -> Result<Var> {
        let bc = broadcast(self.shape(a), self.shape(b))?;
        let av = self.value(a);
        let bv = self.value(b);
        let value: Vec<f64> = if bc {
            let n = bv.len();
            av.iter().enumerate().map(|(i, x)| f(*x, bv[i % n])).collect()
        } else {
            av.iter().zip(bv).map(|(x, y)| f(*x, *y)).collect()
        };
        let shape = self.shape(a).to_vec();
        let tracked = self.tracked(&[a, b]);
        self.push(shape, value, op, tracked)
    }

    /// `a + b`; `b` may be a vector broadcast over the last axis of `a`.
    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.elementwise(a, b, |x, y| x + y, Op::Add(a, b))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        self.elementwise(a, b, |x, y| x - y, Op::Sub(a, b))
    }

    /// Elementwise product with last-axis broadcasting of `b`.
    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.elementwise(a, b, |x, y| x * y, Op::Mul(a, b))
    }

    pub fn scale(&mut self, a: Var, k: f64) -> Result<Var> {
        let value = self.value(a).iter().map(|x| x * k).collect();
        let shape = self.shape(a).to_vec();
        let tracked = self.tracked(&[a]);
        self.push(shape, value, Op::Scale(a, k), tracked)
    }

    pub fn neg(&mut self, a: Var) -> Result<Var> {
        self.scale(a, -1.0)
    }

    /// `[m, k] x [k, n] -> [m, n]`.
    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (sa, sb) = (self.shape(a), self.shape(b));
        if sa.len() != 2 || sb.len() != 2 || sa[1] != sb[0] {
            return Err(Error::config(format!("matmul shape mismatch {sa:?} x {sb:?}")));
        }
        let (m, k, n) = (sa[0], sa[1], sb[1]);
        let av = self.value(a);
        let bv = self.value(b);
        let mut out = vec![0.0; m * n];
        for i in 0..m {
            let row = &mut out[i * n..(i + 1) * n];
            for p in 0..k {
                let x = av[i * k + p];
                if x == 0.0 {
                    continue;
                }
                let brow = &bv[p * n..(p + 1) * n];
                for (o, y) in row.iter_mut().zip(brow) {
                    *o += x * y;
                }
            }
        }
        let tracked = self.tracked(&[a, b]);
        self.push(vec![m, n], out, Op::MatMul(a, b), tracked)
    }

    /// Transpose of a 2-D tensor.
    pub fn transpose(&mut self, a: Var) -> Result<Var> {
        let s = self.shape(a);
        if s.len() != 2 {
            return Err(Error::config(format!("transpose needs 2-D input, got {s:?}")));
        }
        let (m, n) = (s[0], s[1]);
        let av = self.value(a);
        let mut out = vec![0.0; m * n];
        for i in 0..m {
            for j in 0..n {
                out[j * m + i] = av[i * n + j];
            }
        }
        let tracked = self.tracked(&[a]);
        self.push(vec![n, m], out, Op::Transpose(a), tracked)
    }

    fn unary(&mut self, a: Var, f: impl Fn(f64) -> f64, op: Op) -> Result<Var> {
        let value = self.value(a).iter().map(|x| f(*x)).collect();
        let shape = self.shape(a).to_vec();
        let tracked = self.tracked(&[a]);
        self.push(shape, value, op, tracked)
    }

    pub fn relu(&mut self, a: Var) -> Result<Var> {
        self.unary(a, |x| x.max(0.0), Op::Relu(a))
    }

    pub fn tanh(&mut self, a: Var) -> Result<Var> {
        self.unary(a, libm::tanh, Op::Tanh(a))
    }

    pub fn exp(&mut self, a: Var) -> Result<Var> {
        self.unary(a, libm::exp, Op::Exp(a))
    }

    /// Clamps into `[lo, hi]`; the gradient is zero where the bound is active.
    pub fn clamp(&mut self, a: Var, lo: f64, hi: f64) -> Result<Var> {
        if lo > hi {
            return Err(Error::config("clamp with lo > hi"));
        }
        self.unary(a, |x| x.clamp(lo, hi), Op::Clamp { x: a, lo, hi })
    }

    /// Normalizes each row of the last axis to zero mean and unit variance.
    pub fn layer_norm(&mut self, a: Var, eps: f64) -> Result<Var> {
        let n = last_dim(self.shape(a));
        let av = self.value(a);
        let mut normed = vec![0.0; av.len()];
        let mut inv_std = Vec::with_capacity(av.len() / n);
        for (src, dst) in av.chunks(n).zip(normed.chunks_mut(n)) {
            let mean = src.iter().sum::<f64>() / n as f64;
            let var = src.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n as f64;
            let is = 1.0 / libm::sqrt(var + eps);
            for (d, x) in dst.iter_mut().zip(src) {
                *d = (x - mean) * is;
            }
            inv_std.push(is);
        }
        let shape = self.shape(a).to_vec();
        let tracked = self.tracked(&[a]);
        let value = normed.clone();
        self.push(shape, value, Op::LayerNorm { x: a, normed, inv_std }, tracked)
    }

    /// Softmax over the last axis (max-subtracted).
    pub fn softmax(&mut self, a: Var) -> Result<Var> {
        let n = last_dim(self.shape(a));
        let mut out = Vec::with_capacity(self.value(a).len());
        for row in self.value(a).chunks(n) {
            let lse = log_sum_exp(row);
            out.extend(row.iter().map(|x| libm::exp(x - lse)));
        }
        let shape = self.shape(a).to_vec();
        let tracked = self.tracked(&[a]);
        self.push(shape, out, Op::Softmax(a), tracked)
    }

    /// Log-softmax over the last axis.
    pub fn log_softmax(&mut self, a: Var) -> Result<Var> {
        let n = last_dim(self.shape(a));
        let mut out = Vec::with_capacity(self.value(a).len());
        for row in self.value(a).chunks(n) {
            let lse = log_sum_exp(row);
            out.extend(row.iter().map(|x| x - lse));
        }
        let shape = self.shape(a).to_vec();
        let tracked = self.tracked(&[a]);
        self.push(shape, out, Op::LogSoftmax(a), tracked)
    }

    /// Concatenates along the last axis; leading dimensions must agree.
    pub fn concat(&mut self, parts: &[Var]) -> Result<Var> {
        let first = parts.first().ok_or_else(|| Error::config("concat of nothing"))?;
        let lead = self.shape(*first)[..self.shape(*first).len() - 1].to_vec();
        let mut width = 0;
        for p in parts {
            let s = self.shape(*p);
            if s[..s.len() - 1] != lead[..] {
                return Err(Error::config(format!("concat leading shape mismatch {s:?} vs {lead:?}")));
            }
            width += last_dim(s);
        }
        let r: usize = lead.iter().product();
        let mut out = Vec::with_capacity(r * width);
        for i in 0..r {
            for p in parts {
                let w = last_dim(self.shape(*p));
                out.extend_from_slice(&self.value(*p)[i * w..(i + 1) * w]);
            }
        }
        let mut shape = lead;
        shape.push(width);
        let tracked = self.tracked(parts);
        self.push(shape, out, Op::Concat(parts.to_vec()), tracked)
    }

    /// `a[..., start..start + len]`.
    pub fn slice(&mut self, a: Var, start: usize, len: usize) -> Result<Var> {
        let n = last_dim(self.shape(a));
        if len == 0 || start + len > n {
            return Err(Error::config(format!("slice {start}..{} out of last axis {n}", start + len)));
        }
        let out: Vec<f64> = self
            .value(a)
            .chunks(n)
            .flat_map(|row| row[start..start + len].iter().copied())
            .collect();
        let mut shape = self.shape(a).to_vec();
        *shape.last_mut().unwrap() = len;
        let tracked = self.tracked(&[a]);
        self.push(shape, out, Op::Slice { x: a, start }, tracked)
    }

    pub fn reshape(&mut self, a: Var, shape: &[usize]) -> Result<Var> {
        let numel: usize = shape.iter().product();
        if shape.is_empty() || numel != self.value(a).len() {
            return Err(Error::config(format!("cannot reshape {:?} to {shape:?}", self.shape(a))));
        }
        let value = self.value(a).to_vec();
        let tracked = self.tracked(&[a]);
        self.push(shape.to_vec(), value, Op::Reshape(a), tracked)
    }

    /// Picks elements by flat index into a 1-D result.
    pub fn gather(&mut self, a: Var, indices: &[usize]) -> Result<Var> {
        let n = self.value(a).len();
        if indices.is_empty() {
            return Err(Error::config("gather with no indices"));
        }
        if let Some(bad) = indices.iter().find(|&&i| i >= n) {
            return Err(Error::config(format!("gather index {bad} out of {n}")));
        }
        let out = indices.iter().map(|&i| self.value(a)[i]).collect();
        let tracked = self.tracked(&[a]);
        self.push(vec![indices.len()], out, Op::Gather { x: a, indices: indices.to_vec() }, tracked)
    }

    /// Sums contiguous `(offset, len)` segments of a flattened tensor into a vector.
    pub fn segment_sum(&mut self, a: Var, segments: &[(usize, usize)]) -> Result<Var> {
        let av = self.value(a);
        if segments.is_empty() || segments.iter().any(|&(o, l)| o + l > av.len()) {
            return Err(Error::config("segments out of range"));
        }
        let out = segments.iter().map(|&(o, l)| av[o..o + l].iter().sum()).collect();
        let tracked = self.tracked(&[a]);
        let op = Op::SegmentSum {
            x: a,
            segments: segments.to_vec(),
        };
        self.push(vec![segments.len()], out, op, tracked)
    }

    /// Reduces the last axis by summation. A 1-D input yields shape `[1]`.
    pub fn sum_last(&mut self, a: Var) -> Result<Var> {
        let s = self.shape(a).to_vec();
        let n = last_dim(&s);
        let out = self.value(a).chunks(n).map(|r| r.iter().sum()).collect();
        let shape = if s.len() == 1 { vec![1] } else { s[..s.len() - 1].to_vec() };
        let tracked = self.tracked(&[a]);
        self.push(shape, out, Op::SumLast(a), tracked)
    }

    /// Sum of all elements as a scalar.
    pub fn sum(&mut self, a: Var) -> Result<Var> {
        let s = self.value(a).iter().sum();
        let tracked = self.tracked(&[a]);
        self.push(vec![1], vec![s], Op::Sum(a), tracked)
    }

    pub fn mean(&mut self, a: Var) -> Result<Var> {
        let v = self.value(a);
        let m = v.iter().sum::<f64>() / v.len() as f64;
        let tracked = self.tracked(&[a]);
        self.push(vec![1], vec![m], Op::Mean(a), tracked)
    }

    /// Reverse pass from a scalar `loss`.
    pub fn backward(&self, loss: Var) -> Result<Gradients> {
        if self.node(loss).value.len() != 1 {
            return Err(Error::usage(format!(
                "backward needs a scalar loss, got shape {:?}",
                self.node(loss).shape
            )));
        }
        let mut grads: Vec<Option<Vec<f64>>> = vec![None; self.nodes.len()];
        grads[loss.0] = Some(vec![1.0]);

        for idx in (0..=loss.0).rev() {
            let Some(g) = grads[idx].take() else { continue };
            let node = &self.nodes[idx];
            if !node.tracked {
                continue;
            }
            self.propagate(node, &g, &mut grads)?;
            grads[idx] = Some(g);
        }
        for g in grads.iter().flatten() {
            if g.iter().any(|v| !v.is_finite()) {
                return Err(Error::numeric("non-finite gradient"));
            }
        }
        Ok(Gradients { grads })
    }

    fn propagate(&self, node: &Node, g: &[f64], grads: &mut [Option<Vec<f64>>]) -> Result<()> {
        let nodes = &self.nodes;
        let mut acc = |v: Var, f: &mut dyn FnMut(&mut [f64])| {
            if !nodes[v.0].tracked {
                return;
            }
            let buf = grads[v.0].get_or_insert_with(|| vec![0.0; nodes[v.0].value.len()]);
            f(buf);
        };
        match &node.op {
            Op::Leaf => {}
            Op::Add(a, b) | Op::Sub(a, b) => {
                let sign = if matches!(node.op, Op::Sub(..)) { -1.0 } else { 1.0 };
                acc(*a, &mut |buf| buf.iter_mut().zip(g).for_each(|(d, x)| *d += x));
                let n = nodes[b.0].value.len();
                acc(*b, &mut |buf| {
                    for (i, x) in g.iter().enumerate() {
                        buf[i % n] += sign * x;
                    }
                });
            }
            Op::Mul(a, b) => {
                let av = &nodes[a.0].value;
                let bv = &nodes[b.0].value;
                let n = bv.len();
                acc(*a, &mut |buf| {
                    for (i, x) in g.iter().enumerate() {
                        buf[i] += x * bv[i % n];
                    }
                });
                acc(*b, &mut |buf| {
                    for (i, x) in g.iter().enumerate() {
                        buf[i % n] += x * av[i];
                    }
                });
            }
            Op::Scale(a, k) => acc(*a, &mut |buf| buf.iter_mut().zip(g).for_each(|(d, x)| *d += k * x)),
            Op::MatMul(a, b) => {
                let (m, k) = (nodes[a.0].shape[0], nodes[a.0].shape[1]);
                let n = nodes[b.0].shape[1];
                let av = &nodes[a.0].value;
                let bv = &nodes[b.0].value;
                // dA = dC · Bᵀ
                acc(*a, &mut |buf| {
                    for i in 0..m {
                        let grow = &g[i * n..(i + 1) * n];
                        for p in 0..k {
                            let brow = &bv[p * n..(p + 1) * n];
                            buf[i * k + p] += grow.iter().zip(brow).map(|(x, y)| x * y).sum::<f64>();
                        }
                    }
                });
                // dB = Aᵀ · dC
                acc(*b, &mut |buf| {
                    for i in 0..m {
                        let grow = &g[i * n..(i + 1) * n];
                        for p in 0..k {
                            let x = av[i * k + p];
                            if x == 0.0 {
                                continue;
                            }
                            for (d, y) in buf[p * n..(p + 1) * n].iter_mut().zip(grow) {
                                *d += x * y;
                            }
                        }
                    }
                });
            }
            Op::Transpose(a) => {
                let (m, n) = (nodes[a.0].shape[0], nodes[a.0].shape[1]);
                acc(*a, &mut |buf| {
                    for i in 0..m {
                        for j in 0..n {
                            buf[i * n + j] += g[j * m + i];
                        }
                    }
                });
            }
            Op::Relu(a) => {
                let av = &nodes[a.0].value;
                acc(*a, &mut |buf| {
                    for ((d, x), v) in buf.iter_mut().zip(g).zip(av) {
                        if *v > 0.0 {
                            *d += x;
                        }
                    }
                });
            }
            Op::Tanh(a) => {
                let y = &node.value;
                acc(*a, &mut |buf| {
                    for ((d, x), t) in buf.iter_mut().zip(g).zip(y) {
                        *d += x * (1.0 - t * t);
                    }
                });
            }
            Op::Exp(a) => {
                let y = &node.value;
                acc(*a, &mut |buf| buf.iter_mut().zip(g).zip(y).for_each(|((d, x), e)| *d += x * e));
            }
            Op::Clamp { x: a, lo, hi } => {
                let av = &nodes[a.0].value;
                acc(*a, &mut |buf| {
                    for ((d, x), v) in buf.iter_mut().zip(g).zip(av) {
                        if *v >= *lo && *v <= *hi {
                            *d += x;
                        }
                    }
                });
            }
            Op::LayerNorm { x: a, normed, inv_std } => {
                let n = last_dim(&node.shape);
                acc(*a, &mut |buf| {
                    for (r, is) in inv_std.iter().enumerate() {
                        let gr = &g[r * n..(r + 1) * n];
                        let yr = &normed[r * n..(r + 1) * n];
                        let mean_g = gr.iter().sum::<f64>() / n as f64;
                        let mean_gy = gr.iter().zip(yr).map(|(x, y)| x * y).sum::<f64>() / n as f64;
                        for j in 0..n {
                            buf[r * n + j] += is * (gr[j] - mean_g - yr[j] * mean_gy);
                        }
                    }
                });
            }
            Op::Softmax(a) => {
                let n = last_dim(&node.shape);
                let y = &node.value;
                acc(*a, &mut |buf| {
                    for r in 0..rows(&node.shape) {
                        let gr = &g[r * n..(r + 1) * n];
                        let yr = &y[r * n..(r + 1) * n];
                        let dot: f64 = gr.iter().zip(yr).map(|(x, p)| x * p).sum();
                        for j in 0..n {
                            buf[r * n + j] += yr[j] * (gr[j] - dot);
                        }
                    }
                });
            }
            Op::LogSoftmax(a) => {
                let n = last_dim(&node.shape);
                let y = &node.value;
                acc(*a, &mut |buf| {
                    for r in 0..rows(&node.shape) {
                        let gr = &g[r * n..(r + 1) * n];
                        let yr = &y[r * n..(r + 1) * n];
                        let total: f64 = gr.iter().sum();
                        for j in 0..n {
                            buf[r * n + j] += gr[j] - libm::exp(yr[j]) * total;
                        }
                    }
                });
            }
            Op::Concat(parts) => {
                let width = last_dim(&node.shape);
                let r = rows(&node.shape);
                let mut col = 0;
                for p in parts {
                    let w = last_dim(&nodes[p.0].shape);
                    acc(*p, &mut |buf| {
                        for i in 0..r {
                            for j in 0..w {
                                buf[i * w + j] += g[i * width + col + j];
                            }
                        }
                    });
                    col += w;
                }
            }
            Op::Slice { x: a, start } => {
                let w = last_dim(&node.shape);
                let n = last_dim(&nodes[a.0].shape);
                acc(*a, &mut |buf| {
                    for (i, gr) in g.chunks(w).enumerate() {
                        for (j, x) in gr.iter().enumerate() {
                            buf[i * n + start + j] += x;
                        }
                    }
                });
            }
            Op::Reshape(a) => acc(*a, &mut |buf| buf.iter_mut().zip(g).for_each(|(d, x)| *d += x)),
            Op::Gather { x: a, indices } => acc(*a, &mut |buf| {
                for (&i, x) in indices.iter().zip(g) {
                    buf[i] += x;
                }
            }),
            Op::SegmentSum { x: a, segments } => acc(*a, &mut |buf| {
                for (&(o, l), x) in segments.iter().zip(g) {
                    buf[o..o + l].iter_mut().for_each(|d| *d += x);
                }
            }),
            Op::SumLast(a) => {
                let n = last_dim(&nodes[a.0].shape);
                acc(*a, &mut |buf| {
                    for (i, d) in buf.iter_mut().enumerate() {
                        *d += g[i / n];
                    }
                });
            }
            Op::Sum(a) => acc(*a, &mut |buf| buf.iter_mut().for_each(|d| *d += g[0])),
            Op::Mean(a) => {
                let n = nodes[a.0].value.len() as f64;
                acc(*a, &mut |buf| buf.iter_mut().for_each(|d| *d += g[0] / n));
            }
        }
        Ok(())
    }
}

fn op_name(op: &Op) -> &'static str {
    match op {
        Op::Leaf => "leaf",
        Op::Add(..) => "add",
        Op::Sub(..) => "sub",
        Op::Mul(..) => "mul",
        Op::Scale(..) => "scale",
        Op::MatMul(..) => "matmul",
        Op::Transpose(..) => "transpose",
        Op::Relu(..) => "relu",
        Op::Tanh(..) => "tanh",
        Op::Exp(..) => "exp",
        Op::Clamp { .. } => "clamp",
        Op::LayerNorm { .. } => "layer_norm",
        Op::Softmax(..) => "softmax",
        Op::LogSoftmax(..) => "log_softmax",
        Op::Concat(..) => "concat",
        Op::Slice { .. } => "slice",
        Op::Reshape(..) => "reshape",
        Op::Gather { .. } => "gather",
        Op::SegmentSum { .. } => "segment_sum",
        Op::SumLast(..) => "sum_last",
        Op::Sum(..) => "sum",
        Op::Mean(..) => "mean",
    }
}
