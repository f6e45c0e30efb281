//! Command-line frontend.
//!
//! ```text
//! gaitopt solve <scenario.toml> [--out DIR] [--plot] [--verbose] [--no-robust-cost]
//! gaitopt verify <solution.json>
//! ```
//!
//! Exit codes: 0 success, 2 configuration error, 3 solver failure,
//! 4 verification failure.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::output::{write_outputs, SolutionDump};
use crate::scenario::Scenario;
use crate::solver::Status;
use crate::verify::Tolerances;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;
pub const EXIT_VERIFY: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "gaitopt", version, about = "Gait trajectory optimization for legged robots")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve a scenario, verify the result and write outputs.
    Solve {
        scenario: PathBuf,
        /// Directory for trajectory.csv, solution.json and plot.svg.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write a top-down SVG plot.
        #[arg(long)]
        plot: bool,
        /// Print solver progress to stderr.
        #[arg(long)]
        verbose: bool,
        /// Drop the load robustness cost.
        #[arg(long)]
        no_robust_cost: bool,
    },
    /// Re-verify a stored solution without solving.
    Verify { solution: PathBuf },
}

/// Parses `args` (including the program name) and runs; returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match cli.command {
        Command::Solve {
            scenario,
            out,
            plot,
            verbose,
            no_robust_cost,
        } => solve(scenario, out, plot, verbose, no_robust_cost),
        Command::Verify { solution } => verify(solution),
    }
}

fn solve(path: PathBuf, out: Option<PathBuf>, plot: bool, verbose: bool, no_robust_cost: bool) -> i32 {
    let mut scenario = match Scenario::load(&path) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };
    scenario.solver.verbose |= verbose;
    if no_robust_cost {
        scenario.robust_cost = false;
    }
    let dump = match scenario.solve() {
        Ok(d) => d,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_SOLVER;
        }
    };
    println!("{}", dump.summary());
    if let Some(dir) = out.or_else(|| scenario.output.dir.clone()) {
        if let Err(e) = write_outputs(&dir, &dump, plot || scenario.output.plot) {
            eprintln!("error: writing outputs to {}: {e}", dir.display());
            return EXIT_CONFIG;
        }
        println!("outputs      {}", dir.display());
    }
    exit_code(&dump)
}

fn verify(path: PathBuf) -> i32 {
    let dump = match SolutionDump::read_json(&path) {
        Ok(d) => d,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };
    match dump.reverify(&Tolerances::default()) {
        Ok(report) => {
            let dump = SolutionDump { report, ..dump };
            println!("{}", dump.summary());
            exit_code(&dump)
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_CONFIG
        }
    }
}

/// Exit code for a finished run.
pub fn exit_code(dump: &SolutionDump) -> i32 {
    if dump.status != Status::Optimal {
        EXIT_SOLVER
    } else if !dump.report.passed() {
        EXIT_VERIFY
    } else {
        EXIT_OK
    }
}
