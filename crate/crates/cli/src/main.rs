use std::path::PathBuf;
use std::process;

use clap::{Parser, Subcommand};

mod commands;
mod config;
mod error;

use commands::{Hats, ParamSource, SurfacePaths};
use config::{CommonArgs, RunConfig};
use error::CliError;

/// Weibull maximum-likelihood estimation and the Monte Carlo study of its
/// sampling distributions.
#[derive(Parser, Debug)]
#[command(name = "wmle", version)]
struct Cli {
    #[command(flatten)]
    common: CommonArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Fit W(δ, β) to a file with one positive observation per line
    Mle { input: PathBuf },
    /// Simulate the grid and write fitted (a, b, c, d) per cell
    Simulate {
        /// Also write every replication's (δ̂, β̂/β)
        #[arg(long)]
        samples: bool,
    },
    /// Repeat each cell several times and report the spread of (a, b, c, d)
    Repeat {
        #[arg(long, default_value_t = 100)]
        runs: usize,
    },
    /// Fit the regression surrogates to (a, b, c, d) surfaces
    Regress {
        /// `n,delta,value` CSV for a (default: bundled published surface)
        #[arg(long)]
        a: Option<PathBuf>,
        #[arg(long)]
        b: Option<PathBuf>,
        #[arg(long)]
        c: Option<PathBuf>,
        #[arg(long)]
        d: Option<PathBuf>,
    },
    /// Compare fitted, empirical and surrogate quantiles
    Quantiles,
    /// Compare simulated bias and variance with the first-order constants
    Asym {
        #[arg(long, value_enum, default_value_t)]
        source: ParamSource,
        #[arg(long, value_enum, default_value_t)]
        hats: Hats,
    },
    /// Density, variance and skewness curves of W(δ, 1)
    Curves,
    /// Everything except `repeat`, plus a manifest
    Report,
}

fn run(cli: Cli) -> Result<(), CliError> {
    let cfg = RunConfig::resolve(&cli.common)?;
    match cli.command {
        Command::Mle { input } => return commands::mle(&input, &cfg),
        Command::Simulate { samples } => commands::simulate(&cfg, samples)?,
        Command::Repeat { runs } => commands::repeat(&cfg, runs)?,
        Command::Regress { a, b, c, d } => commands::regress(&cfg, &SurfacePaths { a, b, c, d })?,
        Command::Quantiles => commands::quantiles(&cfg)?,
        Command::Asym { source, hats } => commands::asym(&cfg, source, hats)?,
        Command::Curves => commands::curves(&cfg)?,
        Command::Report => commands::report(&cfg)?,
    }
    .iter()
    .for_each(|(name, rows)| eprintln!("wrote {} ({rows} rows)", cfg.out.join(name).display()));
    Ok(())
}

fn main() {
    if let Err(e) = run(Cli::parse()) {
        eprintln!("error: {e}");
        process::exit(e.exit_code());
    }
}
