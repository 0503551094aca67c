mod commands;
mod plot;

use std::path::PathBuf;
use std::process::ExitCode;

use cascade_pde::{Error, Result};
use clap::{Parser, Subcommand};

/// Reaction-diffusion models of information cascades.
#[derive(Debug, Parser)]
#[command(name = "cascade-pde", version)]
struct Cli {
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Seed for randomized steps (fit restarts, synthetic noise).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Also write SVG plots.
    #[arg(long, global = true)]
    plot: bool,
    /// Override a config value, e.g. `--set grid.dt=0.005`.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// Build the observed density field from a graph, a cascade and its sources.
    Ingest,
    /// Recompute a density field from a stored distance table.
    Density,
    /// Solve a scalar or multi-component model.
    Solve,
    /// Fit model parameters to an observed density field.
    Fit,
    /// Minimum wave speed of a linearized system.
    Speed,
    /// Principal eigenvalue of the Robin steady-state problem.
    Eig,
    /// Free-boundary front: trajectory, regime, speed and sweeps.
    Stefan,
    /// Synthetic density field from a model, with optional noise.
    Synth,
}

fn threads_from_env() -> Result<()> {
    let Ok(raw) = std::env::var("CASCADE_PDE_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::Validation(format!("CASCADE_PDE_THREADS = `{raw}` is not a positive integer")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::Validation(format!("thread pool: {e}")))
}

fn run(cli: &Cli) -> Result<()> {
    threads_from_env()?;
    let ctx = commands::Context::prepare(cli.config.as_deref(), &cli.set, cli.out.clone(), cli.seed, cli.plot)?;
    match cli.command {
        Command::Ingest => commands::ingest(ctx),
        Command::Density => commands::density(ctx),
        Command::Solve => commands::solve(ctx),
        Command::Fit => commands::fit(ctx),
        Command::Speed => commands::speed(ctx),
        Command::Eig => commands::eig(ctx),
        Command::Stefan => commands::stefan(ctx),
        Command::Synth => commands::synth(ctx),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
