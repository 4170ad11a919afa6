//! Command-line driver: benchmark generation, data bootstrapping, training,
//! sampling, projection, evaluation and the penalty-growth sweep.

pub mod commands;
pub mod config;
pub mod io;

use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use mrmp_core::MapFamily;

use crate::config::RunConfig;
use crate::io::InstanceFilter;

#[derive(Debug, Parser)]
#[command(name = "mrmp", version, about = "Multi-robot trajectory planning with projected diffusion")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Seed for every random stream of the run (overrides the config file).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// JSON config file; flags take precedence over its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Worker threads for per-instance work (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,
    #[arg(long, global = true, default_value = "info")]
    pub log_level: log::LevelFilter,
}

#[derive(Debug, Args, Clone, Default)]
pub struct SelectArgs {
    /// Instance directory (or a single instance file).
    #[arg(long)]
    pub instances: PathBuf,
    /// Only instances of this map family.
    #[arg(long)]
    pub family: Option<MapFamily>,
    /// Only instances with this many robots.
    #[arg(long)]
    pub robots: Option<usize>,
    /// Stop after this many selected instances.
    #[arg(long)]
    pub limit: Option<usize>,
}

impl SelectArgs {
    pub fn filter(&self) -> InstanceFilter {
        InstanceFilter { family: self.family, robots: self.robots, limit: self.limit }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate benchmark instances and a manifest.
    Generate {
        /// One family only; all six when omitted.
        #[arg(long)]
        family: Option<MapFamily>,
        #[arg(long)]
        maps: Option<usize>,
        /// Robot counts, comma separated (ignored for corridor maps unless
        /// `--family corridor` is given).
        #[arg(long, value_delimiter = ',')]
        robots: Option<Vec<usize>>,
        #[arg(long)]
        cases: Option<usize>,
    },
    /// Build a training set by projecting perturbed straight lines.
    BootstrapData {
        #[command(flatten)]
        select: SelectArgs,
        #[arg(long)]
        per_instance: Option<usize>,
        #[arg(long)]
        amplitude: Option<f64>,
    },
    /// Train a score model on one or more bootstrap datasets.
    Train {
        #[arg(long, required = true)]
        data: Vec<PathBuf>,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        lr: Option<f64>,
        #[arg(long)]
        batch_size: Option<usize>,
        /// Hidden layer widths, comma separated.
        #[arg(long, value_delimiter = ',')]
        hidden: Option<Vec<usize>>,
    },
    /// Sample trajectories with a trained model.
    Sample {
        #[arg(long)]
        model: PathBuf,
        #[command(flatten)]
        select: SelectArgs,
        /// Plain Langevin sampling without projection.
        #[arg(long)]
        no_projection: bool,
        #[arg(long)]
        inner_iters: Option<usize>,
        #[arg(long)]
        gamma0: Option<f64>,
    },
    /// Project one trajectory onto an instance's feasible set.
    Project {
        #[arg(long)]
        instance: PathBuf,
        /// Input trajectory; a noisy straight line when omitted.
        #[arg(long)]
        trajectory: Option<PathBuf>,
        /// Noise level of the generated input.
        #[arg(long, default_value_t = 0.3)]
        noise: f64,
        /// Write the per-outer-iteration trace to trace.csv.
        #[arg(long)]
        trace: bool,
        #[arg(long)]
        zeta: Option<f64>,
    },
    /// Score trajectories against their instances.
    Evaluate {
        #[command(flatten)]
        select: SelectArgs,
        #[arg(long)]
        trajectories: PathBuf,
        /// `discrete`, `interpolated` or `interpolated:<substeps>`.
        #[arg(long)]
        mode: Option<String>,
        /// Shorthand for `--mode discrete`.
        #[arg(long, conflicts_with = "mode")]
        discrete: bool,
    },
    /// Residual traces of the projection for several penalty growth factors.
    SweepZeta {
        #[command(flatten)]
        select: SelectArgs,
        #[arg(long, value_delimiter = ',', default_value = "1.00,1.01,1.03,1.05,1.07,1.09")]
        zetas: Vec<f64>,
        /// Noise level of the straight-line inputs.
        #[arg(long, default_value_t = 0.3)]
        noise: f64,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Generate { .. } => "generate",
            Command::BootstrapData { .. } => "bootstrap-data",
            Command::Train { .. } => "train",
            Command::Sample { .. } => "sample",
            Command::Project { .. } => "project",
            Command::Evaluate { .. } => "evaluate",
            Command::SweepZeta { .. } => "sweep-zeta",
        }
    }
}

/// Runs a parsed command line inside a pool of `--threads` workers.
pub fn run(cli: Cli) -> Result<()> {
    let config = match &cli.global.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.global.threads)
        .build()
        .context("building worker pool")?;
    pool.install(|| commands::dispatch(&cli, config))
}
