//! Command-line front end: `run`, `reproduce` and `sweep`.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use envcorr::experiment::reproduce::{write_reproduction, Options, Target};
use envcorr::experiment::sweep::{sweep, Axis};
use envcorr::experiment::{resolve_out_dir, run::run, ExperimentConfig, Failure, OUT_DIR_ENV};

#[derive(Parser)]
#[command(
    name = "envcorr",
    version,
    about = "Environment-assisted correction of Gaussian channels"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Closed-form predictions and Monte Carlo estimates for one configuration.
    Run {
        config: PathBuf,
        #[arg(long, env = OUT_DIR_ENV)]
        out: Option<PathBuf>,
    },
    /// Regenerate a figure or table data set.
    Reproduce {
        #[arg(value_enum)]
        target: Target,
        #[arg(long, env = OUT_DIR_ENV)]
        out: Option<PathBuf>,
        /// Trajectories per simulated point (0 disables simulation).
        #[arg(long, default_value_t = 100_000)]
        n: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// JSON list of {gamma, v_x, v_p, gain} replacing the built-in
        /// measured rows of table1.
        #[arg(long)]
        measured: Option<PathBuf>,
    },
    /// Vary one parameter of a configuration.
    Sweep {
        config: PathBuf,
        #[arg(long, value_enum)]
        axis: Axis,
        #[arg(
            long,
            value_delimiter = ',',
            required = true,
            allow_negative_numbers = true
        )]
        values: Vec<f64>,
        #[arg(long, env = OUT_DIR_ENV)]
        out: Option<PathBuf>,
    },
}

fn execute(cli: Cli) -> Result<Vec<PathBuf>, Failure> {
    match cli.command {
        Command::Run { config, out } => {
            let cfg = ExperimentConfig::from_path(&config)?;
            Ok(vec![run(&cfg, &resolve_out_dir(out))?])
        }
        Command::Reproduce {
            target,
            out,
            n,
            seed,
            measured,
        } => {
            if n != 0 && n < envcorr::herald::MIN_TRAJECTORIES {
                return Err(Failure::Config(format!(
                    "`n`: must be 0 or at least {}",
                    envcorr::herald::MIN_TRAJECTORIES
                )));
            }
            let mut opts = Options {
                n,
                seed,
                ..Options::default()
            };
            if let Some(path) = measured {
                opts.measured = Options::load_measured(&path)?;
            }
            write_reproduction(target, &opts, &resolve_out_dir(out))
        }
        Command::Sweep {
            config,
            axis,
            values,
            out,
        } => {
            let cfg = ExperimentConfig::from_path(&config)?;
            Ok(vec![sweep(&cfg, axis, &values, &resolve_out_dir(out))?])
        }
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("envcorr: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
