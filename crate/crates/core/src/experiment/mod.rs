//! Experiment runner behind the `envcorr` binary: JSON configs, figure and
//! table reproduction, parameter sweeps, CSV/JSON output.

pub mod config;
pub mod reproduce;
pub mod run;
pub mod sweep;
pub mod table;

use std::path::PathBuf;

pub use config::ExperimentConfig;
pub use table::{Cell, Table};

use crate::error::Error;

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "ENVCORR_OUT_DIR";
/// Output directory when neither a flag nor the environment names one.
pub const DEFAULT_OUT_DIR: &str = "out";

#[derive(Debug, thiserror::Error)]
pub enum Failure {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Model(#[from] Error),
    #[error("i/o error: {0}")]
    Io(String),
}

impl Failure {
    /// Process exit code: 2 configuration, 3 no yield, 4 numerical, 1 i/o.
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Config(_) => 2,
            Failure::Io(_) => 1,
            Failure::Model(e) => match e {
                Error::NoYield { .. } => 3,
                Error::Numeric(_) => 4,
                _ => 2,
            },
        }
    }
}

/// `flag`, else `$ENVCORR_OUT_DIR`, else `out`.
pub fn resolve_out_dir(flag: Option<PathBuf>) -> PathBuf {
    flag.or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR))
}
