//! Command-line front end for `rpca-core`: decompose matrix files, generate
//! synthetic instances and run the benchmark suites.

pub mod bench;
pub mod decompose;
pub mod generate;
pub mod report;

use std::fmt;

use clap::{Parser, Subcommand};

pub use bench::{run_suite, BenchOptions, Suite};
pub use decompose::{DecomposeArgs, DecomposeStats};
pub use generate::{CheckerboardArgs, SynthArgs};
pub use report::{fit_exponent, BenchRecord, BenchReport, Environment, CSV_HEADER, SCHEMA_VERSION};

#[derive(Parser, Debug)]
#[command(name = "rpca", version, about = "Low-rank plus sparse matrix decomposition")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Split a matrix file into low-rank and sparse parts
    Decompose(DecomposeArgs),
    /// Generate a random low-rank plus sparse instance
    Synth(SynthArgs),
    /// Write a corrupted checkerboard image and optionally recover it
    Checkerboard(CheckerboardArgs),
    /// Run a benchmark suite and write a report
    Bench(bench::BenchArgs),
}

/// Exit status for failures that are not argument or I/O errors.
pub mod exit {
    pub const OK: i32 = 0;
    pub const USAGE: i32 = 1;
    pub const UNCONVERGED: i32 = 2;
    pub const DIMENSION: i32 = 3;
}

/// A solve that stopped before meeting its tolerance. Outputs have already
/// been written when this is returned.
#[derive(Debug)]
pub struct Unconverged {
    pub method: &'static str,
    pub residual: f64,
    pub unconverged_subproblems: usize,
}

impl fmt::Display for Unconverged {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} did not converge (residual {:e}", self.method, self.residual)?;
        if self.unconverged_subproblems > 0 {
            write!(f, ", {} unconverged subproblems", self.unconverged_subproblems)?;
        }
        write!(f, ")")
    }
}

impl std::error::Error for Unconverged {}

/// Maps an error to the process exit status.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    if err.downcast_ref::<Unconverged>().is_some() {
        return exit::UNCONVERGED;
    }
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<rpca_core::Error>() {
            return match e {
                rpca_core::Error::Dimension { .. } | rpca_core::Error::ShapeMismatch { .. } => exit::DIMENSION,
                rpca_core::Error::NotConverged { .. } | rpca_core::Error::Diverged { .. } => exit::UNCONVERGED,
                _ => exit::USAGE,
            };
        }
    }
    exit::USAGE
}

pub fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Decompose(args) => decompose::run(&args).map(|_| ()),
        Command::Synth(args) => generate::run_synth(&args),
        Command::Checkerboard(args) => generate::run_checkerboard(&args),
        Command::Bench(args) => bench::run(&args),
    }
}
