use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use sospdiff_cli::commands::{self, GridOptions, SolveOptions, VerifyOptions};
use sospdiff_core::ObjectiveMode;

/// Inner approximations of Pontryagin differences by SOS programming.
#[derive(Parser)]
#[command(name = "sospdiff", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Objective {
    Box,
    Mc,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a problem file and write a result bundle.
    ///
    /// Exit codes: 0 all certificates valid, 1 input error, 2 invalid
    /// certificate, 3 solver failure.
    Solve {
        problem: PathBuf,
        /// Bundle directory.
        #[arg(short, long)]
        out: PathBuf,
        /// Allow problems marked long_running.
        #[arg(long)]
        long_running: bool,
        /// Seed for Monte Carlo points and verification samples.
        #[arg(long)]
        seed: Option<u64>,
        /// Verification and export grid cells per axis.
        #[arg(long)]
        grid_res: Option<usize>,
        #[arg(long, value_enum)]
        objective: Option<Objective>,
        /// Also write each SDP in SDPA sparse format.
        #[arg(long)]
        dump_sdp: bool,
    },
    /// Re-check a bundle by sampling. Exit 0 clean, 1 bad bundle, 2 violations.
    Verify {
        bundle: PathBuf,
        #[arg(long)]
        grid_res: Option<usize>,
        #[arg(long)]
        n_z: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Export a, b and min c on a grid.
    Grid {
        bundle: PathBuf,
        #[arg(long)]
        res: usize,
        #[arg(short, long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let code = match Cli::parse().command {
        Command::Solve {
            problem,
            out,
            long_running,
            seed,
            grid_res,
            objective,
            dump_sdp,
        } => commands::solve(&SolveOptions {
            problem,
            out,
            long_running,
            seed,
            grid_res,
            objective: objective.map(|o| match o {
                Objective::Box => ObjectiveMode::BoxIntegral,
                Objective::Mc => ObjectiveMode::MonteCarlo,
            }),
            dump_sdp,
        }),
        Command::Verify {
            bundle,
            grid_res,
            n_z,
            seed,
        } => commands::verify(&VerifyOptions {
            bundle,
            grid_res,
            n_z,
            seed,
        }),
        Command::Grid { bundle, res, out } => commands::grid(&GridOptions { bundle, res, out }),
    };
    ExitCode::from(code as u8)
}
