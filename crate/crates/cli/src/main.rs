//! `wgscat`: invisibility, perfect-reflection and trapped-mode experiments
//! for symmetric branched waveguides.
//!
//! Exit codes: 0 success, 2 invalid configuration, 3 solver failure,
//! 4 exceptional case, 1 anything else (I/O).

mod commands;
mod config;
mod output;
mod svg;

use std::process::ExitCode;

use clap::{ArgAction, Parser, Subcommand};
use wgscat_core::Error as CoreError;

use crate::commands::SolverFailure;
use crate::config::{ConfigArgs, FieldMode, ValidationError};

#[derive(Parser)]
#[command(name = "wgscat", version, about = "Scattering experiments in symmetric branched waveguides")]
struct Cli {
    /// More log output (-v info, -vv debug). RUST_LOG overrides.
    #[arg(short, long, action = ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sweep T and R over L, refine the points T = 1 and R = 1.
    SweepInvisibility(ConfigArgs),
    /// Sweep the augmented matrix over L, refine s22 = -1 and export the trapped modes.
    SweepTrapped(ConfigArgs),
    /// Limit scattering matrices and their identity residuals.
    LimitMatrices(ConfigArgs),
    /// Compare Rh and s22 with their large-L asymptotics.
    AsymptoticCompare(ConfigArgs),
    /// Solve once at --L and export the field on a grid.
    SolveField {
        #[command(flatten)]
        args: ConfigArgs,
        #[arg(long, value_enum)]
        mode: Option<FieldMode>,
    },
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<ValidationError>() {
            return 2;
        }
        if cause.is::<SolverFailure>() {
            return 3;
        }
        if let Some(e) = cause.downcast_ref::<CoreError>() {
            return match e {
                CoreError::Exceptional(_) => 4,
                CoreError::Wavenumber(_)
                | CoreError::BranchHeight(_)
                | CoreError::Staircase(_)
                | CoreError::Margin { .. }
                | CoreError::InvalidArgument(_) => 2,
                _ => 3,
            };
        }
    }
    1
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    let result = match &cli.command {
        Command::SweepInvisibility(a) => commands::sweep_invisibility(a),
        Command::SweepTrapped(a) => commands::sweep_trapped(a),
        Command::LimitMatrices(a) => commands::limit_matrices(a),
        Command::AsymptoticCompare(a) => commands::asymptotic_compare(a),
        Command::SolveField { args, mode } => commands::solve_field(args, *mode),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
