//! Command-line pipeline around `qconv-core`: noisy simulation, transition
//! matrices, dataset generation, equation discovery and validation.

pub mod commands;
pub mod config;
pub mod error;
pub mod manifest;
pub mod qasm;

use std::path::PathBuf;

use clap::{Parser, Subcommand};
use qconv_core::ChannelKind;

pub use config::{Overrides, RunConfig};
pub use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "qconv", version, about = "Noisy quantum simulation of linear convection and model discovery")]
pub struct Cli {
    /// TOML configuration file; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Noise strength for every noisy section.
    #[arg(long, global = true)]
    pub p: Option<f64>,
    #[arg(long, global = true)]
    pub steps: Option<usize>,
    /// Register size; the grid has 2^qubits points.
    #[arg(long, global = true)]
    pub qubits: Option<usize>,
    #[arg(long, global = true)]
    pub channel: Option<ChannelKind>,
    #[arg(long, global = true)]
    pub shots: Option<u64>,
    /// Comma-separated terms for the restricted library, e.g. `u,u^2,u_xx`.
    #[arg(long, global = true, value_delimiter = ',')]
    pub restrict_terms: Option<Vec<String>>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Ideal and noisy evolution of the configured initial condition.
    Simulate,
    /// Analytic and empirical transition matrices with Hamming profiles.
    Transition {
        /// Layer counts; defaults to the config list.
        #[arg(long, value_delimiter = ',')]
        layers: Vec<usize>,
    },
    /// Noisy training and held-out datasets from random initial conditions.
    GenDatasets,
    /// Sparse regression on the training datasets.
    Discover,
    /// Integrates discovered models against held-out datasets.
    Validate,
    /// Writes the evolution circuit as OpenQASM 2.0.
    ExportQasm {
        #[arg(long)]
        layers: usize,
        /// Prepare this computational basis state before the layers.
        #[arg(long)]
        basis: Option<usize>,
    },
    /// Prints the effective configuration as TOML.
    ShowConfig,
}

impl Cli {
    pub fn overrides(&self) -> Overrides {
        Overrides {
            seed: self.seed,
            out: self.out.clone(),
            p: self.p,
            steps: self.steps,
            qubits: self.qubits,
            channel: self.channel,
            shots: self.shots,
            restrict_terms: self.restrict_terms.clone(),
        }
    }

    /// File values, then flag overrides, then validation.
    pub fn resolve_config(&self) -> Result<RunConfig, CliError> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        cfg.apply(&self.overrides());
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Runs one invocation and returns the lines to print.
pub fn run(cli: &Cli) -> Result<Vec<String>, CliError> {
    let cfg = cli.resolve_config()?;
    match &cli.command {
        Command::Simulate => commands::cmd_simulate(&cfg),
        Command::Transition { layers } => commands::cmd_transition(&cfg, layers),
        Command::GenDatasets => commands::cmd_gen_datasets(&cfg),
        Command::Discover => commands::cmd_discover(&cfg),
        Command::Validate => commands::cmd_validate(&cfg),
        Command::ExportQasm { layers, basis } => {
            let (path, _) = commands::cmd_export_qasm(&cfg, *layers, *basis)?;
            Ok(vec![path.display().to_string()])
        }
        Command::ShowConfig => Ok(vec![cfg.to_toml()]),
    }
}
