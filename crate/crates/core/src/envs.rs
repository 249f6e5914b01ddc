//! Evaluation environments: the contract, synthetic hidden-optimum
//! benchmarks, closure-backed environments and exhaustive search.

use alloc::boxed::Box;
use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::resonance::{weighted_reward, ObjectiveWeights};
use crate::space::{DesignPoint, DesignSpace};
use crate::{Error, Result};

pub type Objectives = BTreeMap<String, f64>;

/// Name of the single objective reported by synthetic benchmarks.
pub const DISTANCE_OBJECTIVE: &str = "distance_penalty";

/// Spaces larger than this are refused by [`brute_force_optimum`].
pub const BRUTE_FORCE_LIMIT: f64 = 1e7;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvalResult {
    Objectives(Objectives),
    /// The evaluator rejected or failed on the design.
    Anomaly(String),
}

impl EvalResult {
    pub fn is_anomaly(&self) -> bool {
        matches!(self, EvalResult::Anomaly(_))
    }
}

/// Something that scores complete designs.
///
/// `Err` from `evaluate` is a run-level failure (the evaluator is gone);
/// per-design failures are reported as [`EvalResult::Anomaly`].
pub trait Environment {
    fn space(&self) -> &DesignSpace;

    fn evaluate(&mut self, design: &DesignPoint) -> Result<EvalResult>;

    /// Evaluates a batch; results come back in input order.
    fn evaluate_batch(&mut self, designs: &[DesignPoint]) -> Result<Vec<EvalResult>> {
        designs.iter().map(|d| self.evaluate(d)).collect()
    }

    /// Objective values at the optimum, when the environment knows them.
    fn optimum_objectives(&self) -> Option<Objectives> {
        None
    }
}

impl<E: Environment + ?Sized> Environment for &mut E {
    fn space(&self) -> &DesignSpace {
        (**self).space()
    }

    fn evaluate(&mut self, design: &DesignPoint) -> Result<EvalResult> {
        (**self).evaluate(design)
    }

    fn evaluate_batch(&mut self, designs: &[DesignPoint]) -> Result<Vec<EvalResult>> {
        (**self).evaluate_batch(designs)
    }

    fn optimum_objectives(&self) -> Option<Objectives> {
        (**self).optimum_objectives()
    }
}

impl<E: Environment + ?Sized> Environment for Box<E> {
    fn space(&self) -> &DesignSpace {
        (**self).space()
    }

    fn evaluate(&mut self, design: &DesignPoint) -> Result<EvalResult> {
        (**self).evaluate(design)
    }

    fn evaluate_batch(&mut self, designs: &[DesignPoint]) -> Result<Vec<EvalResult>> {
        (**self).evaluate_batch(designs)
    }

    fn optimum_objectives(&self) -> Option<Objectives> {
        (**self).optimum_objectives()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Distance {
    /// Sum of absolute index differences.
    #[default]
    #[serde(alias = "l1-index")]
    L1,
    /// Number of mismatched dimensions.
    Hamming,
}

impl Distance {
    pub fn between(self, a: &DesignPoint, b: &DesignPoint) -> usize {
        let pairs = a.indices().iter().zip(b.indices());
        match self {
            Distance::L1 => pairs.map(|(x, y)| x.abs_diff(*y)).sum(),
            Distance::Hamming => pairs.filter(|(x, y)| x != y).count(),
        }
    }
}

impl core::str::FromStr for Distance {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "l1" | "l1-index" => Ok(Distance::L1),
            "hamming" => Ok(Distance::Hamming),
            _ => Err(Error::config(alloc::format!("unknown distance '{s}' (expected l1 or hamming)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub dims: usize,
    pub choices: usize,
    #[serde(default)]
    pub distance: Distance,
    pub seed: u64,
}

/// Hidden-optimum benchmark: the only objective is minus the distance to a
/// point drawn uniformly from the space.
#[derive(Debug, Clone)]
pub struct SyntheticEnv {
    space: DesignSpace,
    optimum: DesignPoint,
    distance: Distance,
}

impl SyntheticEnv {
    pub fn new(spec: SyntheticSpec) -> Result<Self> {
        if spec.dims == 0 || spec.choices == 0 {
            return Err(Error::config("synthetic benchmark needs dims >= 1 and choices >= 1"));
        }
        let space = DesignSpace::uniform(alloc::format!("synthetic-{}x{}", spec.dims, spec.choices), spec.dims, spec.choices)?;
        Ok(Self::over_space(space, spec.distance, spec.seed))
    }

    /// Hidden-optimum benchmark over an arbitrary categorical space.
    pub fn over_space(space: DesignSpace, distance: Distance, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let optimum = DesignPoint(space.cardinalities().iter().map(|&d| rng.random_range(0..d)).collect());
        Self {
            space,
            optimum,
            distance,
        }
    }

    pub fn distance_kind(&self) -> Distance {
        self.distance
    }

    pub fn objective(&self, design: &DesignPoint) -> f64 {
        -(self.distance.between(design, &self.optimum) as f64)
    }

    #[cfg(any(test, feature = "oracle"))]
    pub fn hidden_optimum(&self) -> &DesignPoint {
        &self.optimum
    }
}

impl Environment for SyntheticEnv {
    fn space(&self) -> &DesignSpace {
        &self.space
    }

    fn evaluate(&mut self, design: &DesignPoint) -> Result<EvalResult> {
        self.space.validate_point(design)?;
        let mut o = Objectives::new();
        o.insert(DISTANCE_OBJECTIVE.into(), self.objective(design));
        Ok(EvalResult::Objectives(o))
    }

    fn optimum_objectives(&self) -> Option<Objectives> {
        let mut o = Objectives::new();
        o.insert(DISTANCE_OBJECTIVE.into(), 0.0);
        Some(o)
    }
}

/// Environment backed by a closure.
pub struct FnEnv<F> {
    space: DesignSpace,
    f: F,
    optimum: Option<Objectives>,
}

impl<F: FnMut(&DesignPoint) -> EvalResult> FnEnv<F> {
    pub fn new(space: DesignSpace, f: F) -> Self {
        Self {
            space,
            f,
            optimum: None,
        }
    }

    pub fn with_optimum(mut self, optimum: Objectives) -> Self {
        self.optimum = Some(optimum);
        self
    }
}

impl<F: FnMut(&DesignPoint) -> EvalResult> Environment for FnEnv<F> {
    fn space(&self) -> &DesignSpace {
        &self.space
    }

    fn evaluate(&mut self, design: &DesignPoint) -> Result<EvalResult> {
        self.space.validate_point(design)?;
        Ok((self.f)(design))
    }

    fn optimum_objectives(&self) -> Option<Objectives> {
        self.optimum.clone()
    }
}

/// Single-objective helper for closures returning a plain score.
pub fn objectives(name: &str, value: f64) -> EvalResult {
    let mut o = Objectives::new();
    o.insert(name.into(), value);
    EvalResult::Objectives(o)
}

/// Exhaustive search for the best scalarized reward.
///
/// Ties resolve to the lexicographically smallest design; anomalous and
/// unscorable designs are skipped.
pub fn brute_force_optimum<E: Environment + ?Sized>(env: &mut E, weights: &ObjectiveWeights) -> Result<(DesignPoint, f64)> {
    let size = env.space().space_size();
    if size > BRUTE_FORCE_LIMIT {
        return Err(Error::TooLarge {
            size,
            limit: BRUTE_FORCE_LIMIT,
        });
    }
    let mut best: Option<(DesignPoint, f64)> = None;
    let points: Vec<DesignPoint> = env.space().enumerate().collect();
    for p in points {
        let EvalResult::Objectives(o) = env.evaluate(&p)? else { continue };
        let Ok(r) = weighted_reward(&o, weights) else { continue };
        if best.as_ref().is_none_or(|(_, b)| r > *b) {
            best = Some((p, r));
        }
    }
    best.ok_or_else(|| Error::Environment("no design in the space could be scored".into()))
}
