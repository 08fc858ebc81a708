//! Batch front-end: configuration, the five subcommands and exit codes.
//!
//! Exit codes: 0 success, 1 other failure, 2 configuration error,
//! 3 a scenario did not converge, 4 only ratio failures.

mod commands;
mod config;
mod table;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub use commands::{
    cmd_all, cmd_cea, cmd_optimize, cmd_sensitivity, cmd_simulate, control_cost, load_outcomes,
    model_outcomes, prepare_out_dir, run_sensitivity, solve_masks, write_cea, write_solutions,
    RunStatus,
};
pub use config::{parse_masks, OutputFormat, Overrides, RunConfig, SensitivityConfig, OUT_DIR_ENV};
pub use table::{Cell, Table};

use crate::error::Error;

#[derive(Debug, Parser)]
#[command(name = "tb-control", version, about = "TB transmission model: simulation, optimal control, PRCC and cost-effectiveness")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// JSON configuration file; defaults are used when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,

    #[arg(long, global = true)]
    pub seed: Option<u64>,

    #[arg(long, global = true)]
    pub steps: Option<usize>,

    /// Horizon in months.
    #[arg(long, global = true)]
    pub horizon: Option<f64>,

    /// Scenarios separated by ';', e.g. "none;tpt;tpt,mn,d", or "all".
    #[arg(long, global = true, value_delimiter = ';')]
    pub masks: Option<Vec<String>>,

    /// Cost-effectiveness threshold on the scaled ICER.
    #[arg(long, global = true)]
    pub cet: Option<f64>,

    #[arg(long, global = true, value_enum)]
    pub format: Option<OutputFormat>,

    /// Outcome table (CSV or JSON) used by `cea` instead of model runs.
    #[arg(long, global = true)]
    pub outcomes_file: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, Subcommand)]
pub enum Command {
    /// Uncontrolled trajectory.
    Simulate,
    /// Optimal controls for each scenario.
    Optimize,
    /// PRCC of R0 over Latin hypercube samples.
    Sensitivity,
    /// ACER, AIR, ICER chain and CEA plane.
    Cea,
    /// Every command above into one output directory.
    All,
}

impl Cli {
    pub fn overrides(&self) -> Overrides {
        Overrides {
            out_dir: self.out_dir.clone(),
            seed: self.seed,
            steps: self.steps,
            horizon: self.horizon,
            masks: self.masks.clone(),
            cet: self.cet,
            format: self.format,
            outcomes_file: self.outcomes_file.clone(),
        }
    }
}

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_) => 2,
        Error::UndefinedRatio(_) => 4,
        _ => 1,
    }
}

fn status_code(status: RunStatus) -> i32 {
    match status {
        RunStatus::Ok => 0,
        RunStatus::NotConverged => 3,
        RunStatus::UndefinedRatio => 4,
    }
}

/// Run a parsed command line and return the process exit code.
pub fn run(cli: &Cli) -> i32 {
    let cfg = match RunConfig::load(cli.config.as_deref(), &cli.overrides()) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return exit_code(&e);
        }
    };
    let result = match cli.command {
        Command::Simulate => cmd_simulate(&cfg),
        Command::Optimize => cmd_optimize(&cfg),
        Command::Sensitivity => cmd_sensitivity(&cfg),
        Command::Cea => cmd_cea(&cfg),
        Command::All => cmd_all(&cfg),
    };
    match result {
        Ok(status) => status_code(status),
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
