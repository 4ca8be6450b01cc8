use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use casecross_cli::commands::{self, CommonOpts, Outcome, OutputFormat};

/// Simulation, estimation, and analytic bias toolkit for the
/// outcome-censored case-crossover design.
#[derive(Parser)]
#[command(name = "casecross", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Experiment configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Override the configured master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads; results are identical for any value.
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Output file (stdout when omitted).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Output format where both apply.
    #[arg(long, global = true, value_enum, default_value_t = Format::Records)]
    format: Format,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Records,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a cohort and export it.
    Simulate,
    /// Estimate the Mantel-Haenszel ratio (and optionally the naive cohort
    /// hazard ratio or the trial estimand) from a simulated or imported
    /// cohort.
    Estimate,
    /// Evaluate a bias factor by the configured method.
    Bias,
    /// Closed-form heterogeneity limits for a two-type model.
    Hetero,
    /// Sweep two-type models and tabulate limits and biases.
    Grid,
    /// Audit the design assumptions numerically.
    Audit,
    /// Run the full reproduction battery and print a pass/fail table.
    Reproduce,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let opts = CommonOpts {
        config: cli.config,
        seed_override: cli.seed,
        threads: cli.threads,
        out: cli.out,
        format: match cli.format {
            Format::Records => OutputFormat::Records,
            Format::Csv => OutputFormat::Csv,
        },
    };
    let result = match cli.command {
        Command::Simulate => commands::simulate(&opts),
        Command::Estimate => commands::estimate(&opts),
        Command::Bias => commands::bias(&opts),
        Command::Hetero => commands::hetero(&opts),
        Command::Grid => commands::grid(&opts),
        Command::Audit => commands::audit(&opts),
        Command::Reproduce => commands::reproduce_cmd(&opts),
    };
    match result {
        Ok(Outcome::Success) => ExitCode::SUCCESS,
        Ok(Outcome::Failed) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
