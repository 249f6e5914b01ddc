//! Named spaces and benchmark presets.

use std::path::PathBuf;

use theta_dse_core::envs::Distance;
use theta_dse_core::ga::GaConfig;
use theta_dse_core::resonance::HyperParams;
use theta_dse_core::space::{DesignSpace, SOC_CARDINALITIES};

use crate::config::{ArchSpec, EnvConfig, ExperimentConfig, MethodConfig, ResonanceConfig, SpaceSource, SyntheticEnvConfig};
use crate::{CliError, CliResult};

pub const BENCH_PRESETS: [&str; 3] = ["tiny-5x8", "paper-20x64", "soc-shape"];

/// Space presets: `soc` (the bundled SoC space), `soc-shape` (its
/// cardinalities with generic labels) and `DxC` uniform spaces such as `20x64`.
pub fn space(name: &str) -> CliResult<DesignSpace> {
    match name {
        "soc" => Ok(DesignSpace::soc()),
        "soc-shape" => DesignSpace::from_cardinalities("soc-shape", &SOC_CARDINALITIES).map_err(CliError::config),
        "tiny-5x8" => uniform(5, 8),
        "paper-20x64" => uniform(20, 64),
        _ => {
            let parsed = name
                .split_once('x')
                .and_then(|(d, c)| Some((d.parse::<usize>().ok()?, c.parse::<usize>().ok()?)));
            match parsed {
                Some((d, c)) => uniform(d, c),
                None => Err(CliError::config(format!(
                    "unknown space preset {name:?} (expected soc, soc-shape, tiny-5x8, paper-20x64 or DxC)"
                ))),
            }
        }
    }
}

fn uniform(dims: usize, choices: usize) -> CliResult<DesignSpace> {
    DesignSpace::uniform(format!("synthetic-{dims}x{choices}"), dims, choices).map_err(CliError::config)
}

/// Which optimizer a benchmark runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum BenchMethod {
    Resonance,
    Ga,
}

/// Engine settings tuned per benchmark on the synthetic spaces themselves.
///
/// The default entropy coefficient suits rewards of order one. The 20x64
/// benchmark starts with advantages near 100, so it needs a much larger
/// entropy bonus, decayed over its long budget, plus a smaller network to
/// keep 200k evaluations affordable.
fn resonance_for(preset: &str) -> ResonanceConfig {
    match preset {
        "paper-20x64" => ResonanceConfig {
            architecture: ArchSpec::Text("mlp:64,64".into()),
            hyper: HyperParams {
                beta_e0: 3.0,
                r_decay: 0.9997,
                max_evaluations: 200_000,
                ..HyperParams::default()
            },
        },
        "soc-shape" => ResonanceConfig {
            architecture: ArchSpec::default(),
            hyper: HyperParams {
                max_evaluations: 20_000,
                ..HyperParams::default()
            },
        },
        _ => ResonanceConfig::default(),
    }
}

fn budget_for(preset: &str) -> u64 {
    match preset {
        "paper-20x64" => 200_000,
        "soc-shape" => 20_000,
        _ => 10_000,
    }
}

/// Builds the experiment behind `bench <preset>`.
pub fn bench_config(preset: &str, method: BenchMethod, distance: Distance) -> CliResult<ExperimentConfig> {
    if !BENCH_PRESETS.contains(&preset) {
        return Err(CliError::config(format!(
            "unknown benchmark preset {preset:?} (expected one of {})",
            BENCH_PRESETS.join(", ")
        )));
    }
    let method_cfg = match method {
        BenchMethod::Resonance => MethodConfig::Resonance(resonance_for(preset)),
        BenchMethod::Ga => MethodConfig::Ga(GaConfig {
            max_evaluations: budget_for(preset),
            ..GaConfig::default()
        }),
    };
    Ok(ExperimentConfig {
        space: SpaceSource::Preset { preset: preset.into() },
        env: EnvConfig::Synthetic(SyntheticEnvConfig { distance, seed: None }),
        output_dir: PathBuf::from(format!("runs/bench-{preset}-{}", method_cfg.name())),
        method: method_cfg,
        objective_weights: None,
        max_evaluations: None,
        seeds: None,
    })
}
