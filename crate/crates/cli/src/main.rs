//! `nosignal run | verify | sweep`.
//!
//! Exit codes: 0 when every verdict passes, 1 when a verdict fails, 2 when
//! the configuration or output directory is unusable.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use config::Overrides;

#[derive(Debug, Parser)]
#[command(name = "nosignal", version, about = "No-signaling checks for a simulated entangled pair")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Debug, Args)]
struct CommonArgs {
    /// JSON run configuration.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Directory for CSV and JSON output.
    #[arg(long, global = true, value_name = "PATH", env = "NOSIGNAL_OUT_DIR")]
    out_dir: Option<PathBuf>,
    #[arg(long, global = true, value_name = "U64")]
    seed: Option<u64>,
    /// Lattice points N.
    #[arg(long, global = true, value_name = "INT")]
    grid_n: Option<usize>,
    /// Box half-width L.
    #[arg(long, global = true, value_name = "FLOAT")]
    grid_l: Option<f64>,
    /// Max-abs tolerance on marginal comparisons.
    #[arg(long, global = true, value_name = "FLOAT")]
    tolerance: Option<f64>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Compare one configured operation against free flight.
    Run,
    /// Run the default no-signaling suite.
    Verify {
        /// Add a non-unitary operation to the suite.
        #[arg(long, hide = true)]
        inject_non_unitary: bool,
    },
    /// Repeat a slit run over the configured `widths`.
    Sweep,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("simulation error: {0}")]
    Simulation(#[from] nosignal::Error),
}

/// Resolved config plus the output directory.
pub struct Invocation {
    pub config: config::RunConfig,
    pub out_dir: PathBuf,
}

fn invocation(common: &CommonArgs) -> Result<Invocation, CliError> {
    let mut cfg = match &common.config {
        Some(path) => config::RunConfig::load(path)?,
        None => config::RunConfig::default(),
    };
    cfg.apply(&Overrides {
        seed: common.seed,
        grid_n: common.grid_n,
        grid_l: common.grid_l,
        tolerance: common.tolerance,
    });
    if let Some(dir) = &common.out_dir {
        cfg.out_dir = Some(dir.clone());
    }
    let config = cfg.resolve()?;
    let out_dir = config.out_dir();
    Ok(Invocation { config, out_dir })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = invocation(&cli.common).and_then(|inv| match cli.command {
        Command::Run => commands::run(&inv),
        Command::Verify { inject_non_unitary } => commands::verify(&inv, inject_non_unitary),
        Command::Sweep => commands::sweep(&inv),
    });
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
