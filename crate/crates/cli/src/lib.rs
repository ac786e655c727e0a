//! Command-line front end for `fdreg`: simulate data, fit estimators,
//! run convergence sweeps and diagnostics from one JSON config.

use std::path::PathBuf;

use anyhow::{anyhow, Result};
use clap::{Args, Parser, Subcommand};

pub mod commands;
pub mod config;

pub use commands::{cmd_convergence, cmd_diagnose, cmd_fit, cmd_simulate};
pub use config::RunConfig;
pub use rayon::ThreadPool;

/// A pool with `threads` workers, 0 = one per core.
pub fn thread_pool(threads: usize) -> Result<ThreadPool> {
    Ok(rayon::ThreadPoolBuilder::new().num_threads(threads).build()?)
}

#[derive(Debug, Parser)]
#[command(name = "fdreg", version, about = "Kernel regression on discretized functional data")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Draw curves and responses from a process.
    Simulate(RunArgs),
    /// Predict responses for query curves.
    Fit(RunArgs),
    /// Sweep (n, p) and report mean squared errors.
    Convergence(RunArgs),
    /// Besicovitch, deviation-probability and basis-condition diagnostics.
    Diagnose(RunArgs),
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// JSON run configuration.
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory; overrides `out` in the config.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Master seed; overrides `seed` in the config.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads, 0 = one per core.
    #[arg(long, env = "FDREG_THREADS")]
    pub threads: Option<usize>,
}

/// Loads the config and applies flag overrides.
pub fn resolve(args: &RunArgs) -> Result<(RunConfig, PathBuf, usize)> {
    let mut cfg = RunConfig::load(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    let out = args
        .out
        .clone()
        .or_else(|| cfg.out.clone())
        .ok_or_else(|| anyhow!("no output directory: pass --out or set \"out\" in the config"))?;
    let threads = args.threads.or(cfg.threads).unwrap_or(0);
    Ok((cfg, out, threads))
}

pub fn run(cli: Cli) -> Result<Vec<PathBuf>> {
    let (args, cmd): (&RunArgs, fn(&RunConfig, &std::path::Path) -> Result<Vec<PathBuf>>) = match &cli.command {
        Command::Simulate(a) => (a, cmd_simulate),
        Command::Fit(a) => (a, cmd_fit),
        Command::Convergence(a) => (a, cmd_convergence),
        Command::Diagnose(a) => (a, cmd_diagnose),
    };
    let (cfg, out, threads) = resolve(args)?;
    thread_pool(threads)?.install(|| cmd(&cfg, &out))
}
