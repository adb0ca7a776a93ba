//! Front end of the `virusperiod` tool: configuration parsing, command
//! dispatch and JSON/CSV output.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::result_large_err)]

pub mod commands;
pub mod config;
pub mod output;

use std::fmt;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use virusperiod::{ADecay, D1Variant, Error};

pub const TOOL: &str = "virusperiod";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Process exit status of every command.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Exit {
    Success = 0,
    Config = 2,
    Positivity = 3,
    Hypothesis = 4,
    BoundsInconsistency = 5,
    NonConvergence = 6,
    CertificationFailed = 7,
}

impl Exit {
    pub fn code(self) -> i32 {
        self as i32
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CliError {
    pub exit: Exit,
    pub message: String,
}

impl CliError {
    pub fn new(exit: Exit, message: impl Into<String>) -> Self {
        Self {
            exit,
            message: message.into(),
        }
    }

    pub fn config(message: impl Into<String>) -> Self {
        Self::new(Exit::Config, message)
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let exit = match &e {
            Error::HypothesisInconsistency(_) => Exit::BoundsInconsistency,
            Error::Divergence { .. } | Error::MaxStepsExceeded { .. } | Error::NoAveragedRoot { .. } => {
                Exit::NonConvergence
            }
            Error::InvalidFunction(_)
            | Error::PeriodMismatch { .. }
            | Error::Domain { .. }
            | Error::InvalidConfig(_)
            | Error::Precondition(_) => Exit::Config,
        };
        Self::new(exit, e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum D1Arg {
    Derivation,
    Literal,
}

impl From<D1Arg> for D1Variant {
    fn from(v: D1Arg) -> Self {
        match v {
            D1Arg::Derivation => D1Variant::Derivation,
            D1Arg::Literal => D1Variant::Literal,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ADecayArg {
    Alpha2,
    Alpha1,
}

impl From<ADecayArg> for ADecay {
    fn from(v: ADecayArg) -> Self {
        match v {
            ADecayArg::Alpha2 => ADecay::Alpha2,
            ADecayArg::Alpha1 => ADecay::Alpha1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Parse the configuration and check positivity and the shared period.
    Validate,
    /// Evaluate the existence hypothesis and θ.
    Hypothesis,
    /// Compute the a priori bounds and the log box.
    Bounds,
    /// Integrate from `simulate.y0` to `simulate.t1` and write trajectory.csv.
    Simulate,
    /// Shoot for a periodic orbit and write orbit.csv.
    FindPeriodic,
    /// Find a periodic orbit and certify it.
    Certify,
    /// Hypothesis and bounds over a one-coefficient grid, as JSON lines.
    Sweep,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Validate => "validate",
            Command::Hypothesis => "hypothesis",
            Command::Bounds => "bounds",
            Command::Simulate => "simulate",
            Command::FindPeriodic => "find-periodic",
            Command::Certify => "certify",
            Command::Sweep => "sweep",
        }
    }
}

#[derive(Debug, Clone, Parser)]
#[command(
    name = "virusperiod",
    version,
    about = "Periodic orbits of a computer-virus model with periodic coefficients"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// JSON run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Directory for JSON and CSV artifacts.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub d1_variant: Option<D1Arg>,
    #[arg(long, global = true, value_enum)]
    pub a_decay: Option<ADecayArg>,
    /// Additional shooting starts spread over the a priori box.
    #[arg(long, global = true)]
    pub multi_start: Option<usize>,
    /// Grid density for extrema and positivity.
    #[arg(long, global = true)]
    pub grid_n: Option<usize>,
}
