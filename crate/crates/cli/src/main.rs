use clap::{Parser, Subcommand};
use rotor_annulus_cli::{run, CliError, LoadedConfig, Options, Verb};
use std::path::PathBuf;
use std::process::ExitCode;

/// Reduced maps and exact simulation of particles in an annulus with
/// rotating walls.
#[derive(Parser)]
#[command(name = "rotor-annulus", version)]
struct Cli {
    #[command(subcommand)]
    verb: VerbArg,
    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (default: config `out_dir`, then `out`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed for sampled initial conditions.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Iterations or oracle events.
    #[arg(long, global = true)]
    steps: Option<usize>,
    /// Compare reduced maps against the event-driven simulator.
    #[arg(long, global = true)]
    oracle_check: bool,
}

#[derive(Subcommand, Clone, Copy)]
enum VerbArg {
    /// Velocity circle, U, gamma classification and a skew-product orbit.
    Base,
    /// Single-rotor orbit and fiber rotation.
    Single,
    /// Two-particle persistence experiment.
    Two,
    /// Event-driven Cartesian simulation.
    Oracle,
    /// Continued-fraction classification of gamma.
    Classify,
    /// Parameter grid over (eta1, eta2, F/E).
    Sweep,
    /// Check a configuration without running anything.
    Validate,
}

impl From<VerbArg> for Verb {
    fn from(v: VerbArg) -> Self {
        match v {
            VerbArg::Base => Verb::Base,
            VerbArg::Single => Verb::Single,
            VerbArg::Two => Verb::Two,
            VerbArg::Oracle => Verb::Oracle,
            VerbArg::Classify => Verb::Classify,
            VerbArg::Sweep => Verb::Sweep,
            VerbArg::Validate => Verb::Validate,
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = (|| -> Result<Vec<PathBuf>, CliError> {
        let path = cli
            .config
            .clone()
            .ok_or_else(|| CliError::Config("--config <path> is required".into()))?;
        let cfg = LoadedConfig::load(&path)?;
        let opts = Options {
            out: cli.out.clone(),
            seed: cli.seed,
            steps: cli.steps,
            oracle_check: cli.oracle_check,
        };
        run(cli.verb.into(), &cfg, &opts)
    })();
    match result {
        Ok(files) => {
            if matches!(cli.verb, VerbArg::Validate) {
                println!("configuration is valid");
            }
            for f in files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
