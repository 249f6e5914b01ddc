use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::PolicyOutput;
use crate::diff::{Graph, ParamSet, Tensor, Var};
use crate::space::{DesignSpace, OutputLayout};
use crate::{Error, Result};

const LN_EPS: f64 = 1e-5;

fn default_input_width() -> usize {
    16
}

/// Shape of the policy network.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Architecture {
    /// Fully connected ReLU network on a constant vector of ones.
    Mlp {
        #[serde(default = "default_input_width")]
        input_width: usize,
        hidden: Vec<usize>,
    },
    /// Pre-norm transformer encoder with one token per design dimension.
    Transformer {
        depth: usize,
        width: usize,
        heads: usize,
        ff_width: usize,
    },
}

impl Default for Architecture {
    fn default() -> Self {
        Architecture::Mlp {
            input_width: default_input_width(),
            hidden: vec![256, 256],
        }
    }
}

impl Architecture {
    pub fn default_transformer() -> Self {
        Architecture::Transformer {
            depth: 2,
            width: 64,
            heads: 4,
            ff_width: 256,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Architecture::Mlp { input_width, hidden } => {
                if *input_width == 0 || hidden.is_empty() || hidden.contains(&0) {
                    return Err(Error::config(format!("invalid MLP architecture {self}")));
                }
            }
            Architecture::Transformer {
                depth,
                width,
                heads,
                ff_width,
            } => {
                if *depth == 0 || *width == 0 || *heads == 0 || *ff_width == 0 || width % heads != 0 {
                    return Err(Error::config(format!(
                        "invalid transformer architecture {self}: depth, width, heads and ff_width must be \
                         positive and width divisible by heads"
                    )));
                }
            }
        }
        Ok(())
    }
}

impl fmt::Display for Architecture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Architecture::Mlp { input_width, hidden } => {
                write!(f, "mlp:")?;
                for (i, h) in hidden.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{h}")?;
                }
                if *input_width != default_input_width() {
                    write!(f, "@{input_width}")?;
                }
                Ok(())
            }
            Architecture::Transformer {
                depth,
                width,
                heads,
                ff_width,
            } => write!(f, "transformer:{depth},{width},{heads},{ff_width}"),
        }
    }
}

/// Parses `mlp:256,256[@16]` or `transformer:<depth>,<width>,<heads>,<ff_width>`.
impl FromStr for Architecture {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::config(format!("cannot parse architecture '{s}'"));
        let (kind, rest) = s.split_once(':').ok_or_else(bad)?;
        let nums = |t: &str| -> Result<Vec<usize>> {
            t.split(',')
                .map(|x| x.trim().parse::<usize>().map_err(|_| bad()))
                .collect()
        };
        let arch = match kind.trim() {
            "mlp" => {
                let (hidden, input) = match rest.split_once('@') {
                    Some((h, w)) => (h, w.trim().parse().map_err(|_| bad())?),
                    None => (rest, default_input_width()),
                };
                Architecture::Mlp {
                    input_width: input,
                    hidden: nums(hidden)?,
                }
            }
            "transformer" => match nums(rest)?[..] {
                [depth, width, heads, ff_width] => Architecture::Transformer {
                    depth,
                    width,
                    heads,
                    ff_width,
                },
                _ => return Err(bad()),
            },
            _ => return Err(bad()),
        };
        arch.validate()?;
        Ok(arch)
    }
}

/// Policy network over a fixed design space.
///
/// The network's only input is a constant tensor: a row of ones for the MLP,
/// the `D x D` identity (one hot-1 token per dimension) for the transformer.
/// The final head is zero-initialized, so a fresh network emits exactly
/// uniform distributions.
#[derive(Debug, Clone)]
pub struct PolicyNet {
    arch: Architecture,
    layout: OutputLayout,
    params: ParamSet,
    constant_input: Tensor,
    seed: u64,
    space_hash: String,
}

struct Init {
    rng: ChaCha8Rng,
}

impl Init {
    fn xavier(&mut self, rows: usize, cols: usize) -> Result<Tensor> {
        let a = libm::sqrt(6.0 / (rows + cols) as f64);
        let v = (0..rows * cols).map(|_| self.rng.random_range(-a..a)).collect();
        Tensor::new(&[rows, cols], v)
    }
}

impl PolicyNet {
    pub fn build(space: &DesignSpace, arch: Architecture, seed: u64) -> Result<Self> {
        arch.validate()?;
        let layout = space.output_layout();
        let out_width = layout.total_width();
        let mut init = Init {
            rng: ChaCha8Rng::seed_from_u64(seed),
        };
        let mut params = ParamSet::new();
        let constant_input = match &arch {
            Architecture::Mlp { input_width, hidden } => {
                let mut fan_in = *input_width;
                for (i, &h) in hidden.iter().enumerate() {
                    params.register(format!("mlp.{i}.weight"), init.xavier(fan_in, h)?)?;
                    params.register(format!("mlp.{i}.bias"), Tensor::zeros(&[h])?)?;
                    fan_in = h;
                }
                params.register("head.weight", Tensor::zeros(&[fan_in, out_width])?)?;
                params.register("head.bias", Tensor::zeros(&[out_width])?)?;
                Tensor::filled(&[1, *input_width], 1.0)?
            }
            Architecture::Transformer {
                depth,
                width,
                ff_width,
                ..
            } => {
                let d = layout.dims();
                let w = *width;
                params.register("embed", init.xavier(d, w)?)?;
                for l in 0..*depth {
                    params.register(format!("block.{l}.ln1.gain"), Tensor::filled(&[w], 1.0)?)?;
                    params.register(format!("block.{l}.ln1.bias"), Tensor::zeros(&[w])?)?;
                    for proj in ["q", "k", "v", "o"] {
                        params.register(format!("block.{l}.attn.{proj}.weight"), init.xavier(w, w)?)?;
                        params.register(format!("block.{l}.attn.{proj}.bias"), Tensor::zeros(&[w])?)?;
                    }
                    params.register(format!("block.{l}.ln2.gain"), Tensor::filled(&[w], 1.0)?)?;
                    params.register(format!("block.{l}.ln2.bias"), Tensor::zeros(&[w])?)?;
                    params.register(format!("block.{l}.ff.0.weight"), init.xavier(w, *ff_width)?)?;
                    params.register(format!("block.{l}.ff.0.bias"), Tensor::zeros(&[*ff_width])?)?;
                    params.register(format!("block.{l}.ff.1.weight"), init.xavier(*ff_width, w)?)?;
                    params.register(format!("block.{l}.ff.1.bias"), Tensor::zeros(&[w])?)?;
                }
                params.register("final_ln.gain", Tensor::filled(&[w], 1.0)?)?;
                params.register("final_ln.bias", Tensor::zeros(&[w])?)?;
                // Columns of segment i are read only by token i: per-dimension heads.
                params.register("head.weight", Tensor::zeros(&[w, out_width])?)?;
                params.register("head.bias", Tensor::zeros(&[out_width])?)?;
                let mut eye = vec![0.0; d * d];
                for i in 0..d {
                    eye[i * d + i] = 1.0;
                }
                Tensor::new(&[d, d], eye)?
            }
        };
        Ok(Self {
            arch,
            layout,
            params,
            constant_input,
            seed,
            space_hash: space.hash_hex(),
        })
    }

    pub fn architecture(&self) -> &Architecture {
        &self.arch
    }

    pub fn layout(&self) -> &OutputLayout {
        &self.layout
    }

    pub fn params(&self) -> &ParamSet {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamSet {
        &mut self.params
    }

    pub fn constant_input(&self) -> &Tensor {
        &self.constant_input
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn space_hash(&self) -> &str {
        &self.space_hash
    }

    /// Runs the network on its constant input inside `g`.
    ///
    /// Returns the policy output and the parameter leaves, in registration
    /// order, for [`ParamSet::accumulate`].
    pub fn forward(&self, g: &mut Graph) -> Result<(PolicyOutput, Vec<Var>)> {
        let bound = g.bind(&self.params)?;
        let input = g.leaf(&self.constant_input)?;
        let logits = match &self.arch {
            Architecture::Mlp { hidden, .. } => {
                let mut x = input;
                for i in 0..hidden.len() {
                    let z = g.matmul(x, bound[2 * i])?;
                    let z = g.add(z, bound[2 * i + 1])?;
                    x = g.relu(z)?;
                }
                let n = 2 * hidden.len();
                let out = g.matmul(x, bound[n])?;
                let out = g.add(out, bound[n + 1])?;
                g.reshape(out, &[self.layout.total_width()])?
            }
            Architecture::Transformer { depth, heads, .. } => self.transformer_logits(g, input, &bound, *depth, *heads)?,
        };
        let mut segs = Vec::with_capacity(self.layout.dims());
        for &(offset, len) in self.layout.segments() {
            let s = g.slice(logits, offset, len)?;
            segs.push(g.log_softmax(s)?);
        }
        let log_probs = g.concat(&segs)?;
        Ok((PolicyOutput::new(log_probs, self.layout.clone()), bound))
    }

    fn transformer_logits(&self, g: &mut Graph, input: Var, p: &[Var], depth: usize, heads: usize) -> Result<Var> {
        let mut it = p.iter().copied();
        let mut next = || it.next().expect("parameter count fixed at build time");
        let embed = next();
        let mut x = g.matmul(input, embed)?;
        let width = g.shape(x)[1];
        let dh = width / heads;
        let scale = 1.0 / libm::sqrt(dh as f64);

        let norm = |g: &mut Graph, x: Var, gain: Var, bias: Var| -> Result<Var> {
            let n = g.layer_norm(x, LN_EPS)?;
            let n = g.mul(n, gain)?;
            g.add(n, bias)
        };
        let linear = |g: &mut Graph, x: Var, w: Var, b: Var| -> Result<Var> {
            let y = g.matmul(x, w)?;
            g.add(y, b)
        };

        for _ in 0..depth {
            let (g1, b1) = (next(), next());
            let (wq, bq, wk, bk) = (next(), next(), next(), next());
            let (wv, bv, wo, bo) = (next(), next(), next(), next());
            let (g2, b2) = (next(), next());
            let (w1, c1, w2, c2) = (next(), next(), next(), next());

            let a = norm(g, x, g1, b1)?;
            let q = linear(g, a, wq, bq)?;
            let k = linear(g, a, wk, bk)?;
            let v = linear(g, a, wv, bv)?;
            let mut outs = Vec::with_capacity(heads);
            for h in 0..heads {
                let qh = g.slice(q, h * dh, dh)?;
                let kh = g.slice(k, h * dh, dh)?;
                let vh = g.slice(v, h * dh, dh)?;
                let kt = g.transpose(kh)?;
                let s = g.matmul(qh, kt)?;
                let s = g.scale(s, scale)?;
                let attn = g.softmax(s)?;
                outs.push(g.matmul(attn, vh)?);
            }
            let cat = g.concat(&outs)?;
            let o = linear(g, cat, wo, bo)?;
            x = g.add(x, o)?;

            let a = norm(g, x, g2, b2)?;
            let f = linear(g, a, w1, c1)?;
            let f = g.relu(f)?;
            let f = linear(g, f, w2, c2)?;
            x = g.add(x, f)?;
        }
        let (gf, bf, wh, bh) = (next(), next(), next(), next());
        let x = norm(g, x, gf, bf)?;
        let all = linear(g, x, wh, bh)?;
        // Token i reads only its own segment of the head output.
        let total = self.layout.total_width();
        let idx: Vec<usize> = self
            .layout
            .segments()
            .iter()
            .enumerate()
            .flat_map(|(i, &(o, l))| (o..o + l).map(move |c| i * total + c))
            .collect();
        g.gather(all, &idx)
    }
}
