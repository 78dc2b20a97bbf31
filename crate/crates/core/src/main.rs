use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use tregsim::cli::config::parse_assignment;
use tregsim::cli::{run_command, CliError, OutputFormat, Overrides, RunConfig};

#[derive(Parser)]
#[command(name = "tregsim", version, about = "Lifetime simulation of regulatory T-cell subsets")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one trajectory per seed.
    Simulate(Common),
    /// Replicate over seeds and report cross-run spread.
    Ensemble(Common),
    /// Compare a simulated cross-section with a laboratory cohort by decade.
    Validate(Common),
    /// Paired runs with and without a depletion event.
    Intervene(Common),
    /// One run per value of a parameter grid.
    Sweep(Common),
}

#[derive(Args)]
struct Common {
    /// TOML configuration file.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Seed; repeat for several runs.
    #[arg(long = "seed", value_name = "N")]
    seeds: Vec<u64>,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Laboratory cohort file (age,precursor_prop,quiescent_prop).
    #[arg(long, value_name = "PATH")]
    lab: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<OutputFormat>,
    /// Override a scenario parameter, e.g. --set sigma0=0.
    #[arg(long = "set", value_name = "NAME=VALUE", value_parser = parse_assignment)]
    set: Vec<(String, f64)>,
}

fn load(common: Common) -> Result<RunConfig, CliError> {
    let mut cfg = match &common.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    cfg.apply(Overrides {
        seeds: common.seeds,
        out: common.out,
        lab: common.lab,
        format: common.format,
        set: common.set,
    })?;
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (name, common) = match cli.command {
        Command::Simulate(c) => ("simulate", c),
        Command::Ensemble(c) => ("ensemble", c),
        Command::Validate(c) => ("validate", c),
        Command::Intervene(c) => ("intervene", c),
        Command::Sweep(c) => ("sweep", c),
    };
    let result = load(common).and_then(|cfg| run_command(name, &cfg));
    match result {
        Ok(report) => {
            print!("{}", report.stdout);
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("tregsim {name}: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
