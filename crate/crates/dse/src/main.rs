use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use theta_dse::commands::{bench_experiment, cmd_compare, cmd_run, cmd_space_info};
use theta_dse::config::{parse_seeds, ExperimentConfig, Overrides};
use theta_dse::presets::BenchMethod;
use theta_dse::{CliError, CliResult};
use theta_dse_core::envs::Distance;

#[derive(Parser)]
#[command(name = "theta-dse", version, about = "Design space exploration with single-step compound-action policy gradients")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Parsed `--seeds`; a newtype so clap treats it as one value.
#[derive(Clone)]
struct SeedList(Vec<u64>);

fn seed_list(s: &str) -> Result<SeedList, String> {
    parse_seeds(s).map(SeedList)
}

#[derive(Args, Default)]
struct OverrideArgs {
    /// Seeds, e.g. `1,2,3` or `1..8`. Defaults to eight seeds from $THETA_DSE_SEED (or 1).
    #[arg(long, value_parser = seed_list)]
    seeds: Option<SeedList>,
    /// Evaluation budget per seed.
    #[arg(long)]
    max_evals: Option<u64>,
    /// Policy network, e.g. `mlp:256,256` or `transformer:2,64,4,256`.
    #[arg(long)]
    arch: Option<String>,
    /// Number of external evaluator processes.
    #[arg(long)]
    eval_workers: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl OverrideArgs {
    fn into_overrides(self) -> CliResult<Overrides> {
        let output_dir = match self.out {
            Some(p) if p.is_relative() => Some(std::env::current_dir().map_err(|e| CliError::Runtime(e.into()))?.join(p)),
            other => other,
        };
        Ok(Overrides {
            seeds: self.seeds.map(|s| s.0),
            max_evaluations: self.max_evals,
            architecture: self.arch,
            eval_workers: self.eval_workers,
            output_dir,
        })
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment described by a JSON config.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        overrides: OverrideArgs,
    },
    /// Run a synthetic benchmark preset: tiny-5x8, paper-20x64 or soc-shape.
    Bench {
        preset: String,
        #[arg(long, value_enum, default_value = "resonance")]
        method: BenchMethod,
        /// Distance to the hidden optimum: l1 or hamming.
        #[arg(long, default_value = "l1")]
        distance: Distance,
        #[command(flatten)]
        overrides: OverrideArgs,
    },
    /// Compare run directories produced by `run` or `bench`.
    Compare {
        #[arg(required = true, num_args = 1..)]
        dirs: Vec<PathBuf>,
        /// Reward threshold for samples-to-threshold; defaults to the known optimum.
        #[arg(long, allow_hyphen_values = true)]
        threshold: Option<f64>,
        /// Directory for compare.csv and verdict.txt.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Describe a design space.
    SpaceInfo {
        file: Option<PathBuf>,
        /// soc, soc-shape, tiny-5x8, paper-20x64 or DxC.
        #[arg(long, conflicts_with = "file")]
        preset: Option<String>,
    },
}

fn execute(cli: Cli) -> CliResult<()> {
    let mut stdout = std::io::stdout();
    match cli.command {
        Command::Run { config, overrides } => {
            let (mut cfg, base) = ExperimentConfig::load(&config)?;
            cfg.apply(&overrides.into_overrides()?)?;
            let exp = cfg.resolve(&base)?;
            cmd_run(&exp, &mut stdout)?;
        }
        Command::Bench {
            preset,
            method,
            distance,
            overrides,
        } => {
            let exp = bench_experiment(&preset, method, distance, &overrides.into_overrides()?)?;
            cmd_run(&exp, &mut stdout)?;
        }
        Command::Compare { dirs, threshold, out } => {
            let report = cmd_compare(&dirs, threshold, out.as_deref())?;
            print!("{}", report.verdict);
        }
        Command::SpaceInfo { file, preset } => {
            print!("{}", cmd_space_info(file.as_deref().map(Path::new), preset.as_deref())?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("theta-dse: {e}");
            e.exit_code()
        }
    }
}
