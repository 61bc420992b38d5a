//! `momsl` — fit robust sparse regressions, generate synthetic data, run
//! seeded benchmark grids, and turn the results into rate tables and SVG
//! plots. Every command is deterministic given its flags and seeds.

mod commands;
mod config;
mod errors;
mod metrics;
mod plot;
mod rates;
mod records;
mod runner;

use clap::Parser;

use crate::errors::CliError;

#[derive(Parser, Debug)]
#[command(
    name = "momsl",
    version,
    about = "Robust sparse regression: fit, simulate, benchmark, analyze"
)]
enum Cli {
    /// Fit one estimator to a dataset CSV and print the estimate.
    Fit(commands::FitArgs),
    /// Generate a synthetic dataset CSV, optionally with its ground truth.
    Simulate(commands::SimulateArgs),
    /// Run an experiment grid; one CSV row per (cell, estimator, trial).
    Bench(commands::BenchArgs),
    /// Fit log-log rate slopes through bench output.
    Rates(commands::RatesArgs),
    /// Render an SVG plot from bench output or a solver trace.
    Plot(commands::PlotArgs),
}

fn run(cli: &Cli) -> Result<String, CliError> {
    match cli {
        Cli::Fit(a) => commands::run_fit(a),
        Cli::Simulate(a) => commands::run_simulate(a),
        Cli::Bench(a) => commands::run_bench_cmd(a),
        Cli::Rates(a) => commands::run_rates(a),
        Cli::Plot(a) => commands::run_plot(a),
    }
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // help/version land on stdout with exit 0; real argument errors
            // land on stderr with the usage exit code
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    match run(&cli) {
        Ok(out) => print!("{out}"),
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(e.exit_code() as i32);
        }
    }
}
