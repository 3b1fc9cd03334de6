//! `vdm`: pick distribution centers, solve single frames and run
//! multi-frame vaccination campaigns.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod cluster;
mod failure;
mod generate;
mod output;
mod simulate;
mod solve;

#[derive(Debug, Parser)]
#[command(name = "vdm", version, about)]
struct Cli {
    /// Directory for outputs and the run manifest.
    #[arg(long, global = true, env = "VDM_OUT_DIR", default_value = "vdm-out")]
    out: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Choose distribution centers from a distance matrix with k-medoids.
    Cluster(cluster::ClusterArgs),
    /// Solve a single frame of the assignment problem.
    Solve(solve::SolveArgs),
    /// Run a multi-frame campaign and report coverage and distance.
    Simulate(simulate::SimulateArgs),
    /// Write a generated scenario as JSON and CSV.
    GenScenario(generate::GenerateArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Cluster(args) => cluster::run(args, &cli.out),
        Command::Solve(args) => solve::run(args, &cli.out),
        Command::Simulate(args) => simulate::run(args, &cli.out),
        Command::GenScenario(args) => generate::run(args, &cli.out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(failure::exit_code(&err))
        }
    }
}
