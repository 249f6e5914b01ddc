//! Experiment configuration documents and command-line overrides.

use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::{Deserialize, Serialize};
use theta_dse_core::envs::{Distance, DISTANCE_OBJECTIVE};
use theta_dse_core::ga::GaConfig;
use theta_dse_core::policy::Architecture;
use theta_dse_core::resonance::{HyperParams, ObjectiveWeights};
use theta_dse_core::space::DesignSpace;

use crate::evaluator::ExternalSpec;
use crate::presets;
use crate::{CliError, CliResult};

pub const SEED_ENV_VAR: &str = "THETA_DSE_SEED";
pub const DEFAULT_SEED_COUNT: u64 = 8;

/// Where the design space comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SpaceSource {
    /// `{"preset": "soc"}` or `{"preset": "20x64"}`.
    Preset { preset: String },
    /// Path to a space document, relative to the config file.
    Path(PathBuf),
    Inline(DesignSpace),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticEnvConfig {
    #[serde(default)]
    pub distance: Distance,
    /// Seed of the hidden optimum; each run seed draws its own when absent.
    #[serde(default)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum EnvConfig {
    Synthetic(SyntheticEnvConfig),
    External(ExternalSpec),
}

/// `"mlp:256,256"` or the tagged object form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ArchSpec {
    Text(String),
    Full(Architecture),
}

impl Default for ArchSpec {
    fn default() -> Self {
        ArchSpec::Full(Architecture::default())
    }
}

impl ArchSpec {
    pub fn resolve(&self) -> CliResult<Architecture> {
        let arch = match self {
            ArchSpec::Text(s) => s.parse::<Architecture>().map_err(CliError::config)?,
            ArchSpec::Full(a) => a.clone(),
        };
        arch.validate().map_err(CliError::config)?;
        Ok(arch)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResonanceConfig {
    #[serde(default)]
    pub architecture: ArchSpec,
    #[serde(default)]
    pub hyper: HyperParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum MethodConfig {
    Resonance(ResonanceConfig),
    Ga(GaConfig),
}

impl MethodConfig {
    pub fn name(&self) -> &'static str {
        match self {
            MethodConfig::Resonance(_) => "resonance",
            MethodConfig::Ga(_) => "ga",
        }
    }
}

/// One experiment: a space, an environment, a method and a list of seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub space: SpaceSource,
    pub env: EnvConfig,
    pub method: MethodConfig,
    /// Overrides the method's own weights. Synthetic environments default to
    /// `{"distance_penalty": 1}`; external ones must set weights somewhere.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub objective_weights: Option<ObjectiveWeights>,
    /// Overrides the method's own evaluation budget.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_evaluations: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seeds: Option<Vec<u64>>,
    pub output_dir: PathBuf,
}

/// Command-line flags that take precedence over the document.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seeds: Option<Vec<u64>>,
    pub max_evaluations: Option<u64>,
    pub architecture: Option<String>,
    pub eval_workers: Option<usize>,
    pub output_dir: Option<PathBuf>,
}

/// The method with every default filled in.
#[derive(Debug, Clone, PartialEq)]
pub enum Method {
    Resonance { architecture: Architecture, hyper: HyperParams },
    Ga(GaConfig),
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Resonance { .. } => "resonance",
            Method::Ga(_) => "ga",
        }
    }

    pub fn max_evaluations(&self) -> u64 {
        match self {
            Method::Resonance { hyper, .. } => hyper.max_evaluations,
            Method::Ga(g) => g.max_evaluations,
        }
    }
}

/// A validated experiment ready to run.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub space: DesignSpace,
    pub env: EnvConfig,
    pub method: Method,
    pub weights: ObjectiveWeights,
    pub seeds: Vec<u64>,
    pub output_dir: PathBuf,
    /// Self-contained copy of the configuration, written next to the results.
    pub document: ExperimentConfig,
}

/// Seeds used when neither the config nor the command line lists any:
/// eight consecutive values from `$THETA_DSE_SEED` (default 1).
pub fn default_seeds() -> CliResult<Vec<u64>> {
    let base = match std::env::var(SEED_ENV_VAR) {
        Ok(v) => v
            .trim()
            .parse::<u64>()
            .map_err(|_| CliError::config(format!("{SEED_ENV_VAR} must be an unsigned integer, got {v:?}")))?,
        Err(_) => 1,
    };
    Ok((0..DEFAULT_SEED_COUNT).map(|i| base.wrapping_add(i)).collect())
}

impl ExperimentConfig {
    pub fn from_json(doc: &str) -> CliResult<Self> {
        serde_json::from_str(doc).map_err(|e| CliError::Config(anyhow::Error::new(e).context("invalid experiment config")))
    }

    /// Reads a config file; relative paths inside it resolve against its directory.
    pub fn load(path: &Path) -> CliResult<(Self, PathBuf)> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read {}", path.display()))
            .map_err(CliError::Config)?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok((Self::from_json(&text)?, base))
    }

    pub fn apply(&mut self, o: &Overrides) -> CliResult<()> {
        if let Some(s) = &o.seeds {
            self.seeds = Some(s.clone());
        }
        if let Some(m) = o.max_evaluations {
            self.max_evaluations = Some(m);
        }
        if let Some(a) = &o.architecture {
            match &mut self.method {
                MethodConfig::Resonance(r) => r.architecture = ArchSpec::Text(a.clone()),
                MethodConfig::Ga(_) => return Err(CliError::config("--arch applies to the resonance method only")),
            }
        }
        if let Some(w) = o.eval_workers {
            match &mut self.env {
                EnvConfig::External(e) => e.workers = w,
                EnvConfig::Synthetic(_) => return Err(CliError::config("--eval-workers applies to external evaluators only")),
            }
        }
        if let Some(d) = &o.output_dir {
            self.output_dir = d.clone();
        }
        Ok(())
    }

    /// Validates the document and fills in every default.
    pub fn resolve(&self, base_dir: &Path) -> CliResult<Experiment> {
        let space = match &self.space {
            SpaceSource::Inline(s) => s.clone(),
            SpaceSource::Preset { preset } => presets::space(preset)?,
            SpaceSource::Path(p) => {
                let path = base_dir.join(p);
                let text = std::fs::read_to_string(&path)
                    .with_context(|| format!("cannot read space file {}", path.display()))
                    .map_err(CliError::Config)?;
                DesignSpace::parse_json(&text).map_err(CliError::config)?
            }
        };
        if let EnvConfig::External(e) = &self.env {
            e.validate().map_err(CliError::config)?;
        }

        let method_weights = match &self.method {
            MethodConfig::Resonance(r) if !r.hyper.objective_weights.is_empty() => Some(r.hyper.objective_weights.clone()),
            _ => None,
        };
        let weights = match (&self.objective_weights, method_weights, &self.env) {
            (Some(w), _, _) => w.clone(),
            (None, Some(w), _) => w,
            (None, None, EnvConfig::Synthetic(_)) => ObjectiveWeights::single(DISTANCE_OBJECTIVE, 1.0),
            (None, None, EnvConfig::External(_)) => {
                return Err(CliError::config("external evaluators need explicit objective_weights"))
            }
        };
        if weights.is_empty() || weights.iter().any(|(_, w)| !w.is_finite()) {
            return Err(CliError::config("objective_weights must be non-empty and finite"));
        }

        let method = match &self.method {
            MethodConfig::Resonance(r) => {
                let architecture = r.architecture.resolve()?;
                let mut hyper = r.hyper.clone().with_weights(weights.clone());
                if let Some(m) = self.max_evaluations {
                    hyper.max_evaluations = m;
                }
                hyper.validate().map_err(CliError::config)?;
                Method::Resonance { architecture, hyper }
            }
            MethodConfig::Ga(g) => {
                let mut g = g.clone();
                if let Some(m) = self.max_evaluations {
                    g.max_evaluations = m;
                }
                g.validate().map_err(CliError::config)?;
                Method::Ga(g)
            }
        };

        let seeds = match &self.seeds {
            Some(s) if s.is_empty() => return Err(CliError::config("seeds must not be empty")),
            Some(s) => s.clone(),
            None => default_seeds()?,
        };
        let mut unique = seeds.clone();
        unique.sort_unstable();
        unique.dedup();
        if unique.len() != seeds.len() {
            return Err(CliError::config("seeds must be distinct"));
        }

        let output_dir = if self.output_dir.is_absolute() {
            self.output_dir.clone()
        } else {
            base_dir.join(&self.output_dir)
        };
        let mut document = self.clone();
        document.space = SpaceSource::Inline(space.clone());
        document.seeds = Some(seeds.clone());
        document.objective_weights = Some(weights.clone());
        document.max_evaluations = Some(method.max_evaluations());
        document.output_dir = output_dir.clone();
        Ok(Experiment {
            space,
            env: self.env.clone(),
            method,
            weights,
            seeds,
            output_dir,
            document,
        })
    }
}

/// Parses `1,2,5` or `1..8` (inclusive) seed lists.
pub fn parse_seeds(s: &str) -> Result<Vec<u64>, String> {
    if let Some((a, b)) = s.split_once("..") {
        let a: u64 = a.trim().parse().map_err(|_| format!("bad seed range {s:?}"))?;
        let b: u64 = b.trim().parse().map_err(|_| format!("bad seed range {s:?}"))?;
        if a > b {
            return Err(format!("empty seed range {s:?}"));
        }
        return Ok((a..=b).collect());
    }
    s.split(',')
        .map(|t| t.trim().parse::<u64>().map_err(|_| format!("bad seed {t:?}")))
        .collect()
}
