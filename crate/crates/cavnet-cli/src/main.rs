//! Command-line interface for simulating two-cavity linear quantum networks
//! under direct measurement feedback.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

/// CLI-level error carrying the intended exit code.
#[derive(Debug)]
pub enum CliError {
    /// Invalid usage or configuration (exit code 2).
    Usage(String),
    /// Numerical failure (exit code 3).
    Numeric(String),
}

impl From<cavnet::Error> for CliError {
    fn from(e: cavnet::Error) -> Self {
        match e {
            cavnet::Error::InvalidParameter { .. } | cavnet::Error::DimensionMismatch { .. } => {
                CliError::Usage(e.to_string())
            }
            other => CliError::Numeric(other.to_string()),
        }
    }
}

#[derive(Parser)]
#[command(
    name = "cavnet",
    version,
    about = "Simulate two-cavity linear quantum networks under direct measurement feedback",
    long_about = "Simulate linear (Gaussian) networks of two optical cavities connected by a \
travelling field, optionally closed by direct measurement feedback. Computes covariance \
trajectories, steady states, entanglement (logarithmic negativity) and purity, Riccati-based \
feedback design, and parameter sweeps, emitting deterministic CSV.\n\n\
All times and rates are kappa-normalized: kappa = 1 is the unit decay rate and times are in \
1/kappa."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Options shared by the network-driving subcommands; every field mirrors a
/// config-file key and overrides it when given.
#[derive(Args, Debug, Default)]
struct CommonOpts {
    /// Configuration file with flat `key = value` lines ('#' comments).
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Network kind: ideal | realistic.
    #[arg(long)]
    network: Option<String>,

    /// Upstream cavity coupling: dispersive | damped.
    #[arg(long)]
    cavity1: Option<String>,

    /// Downstream cavity coupling: dispersive | damped.
    #[arg(long)]
    cavity2: Option<String>,

    /// Position curvature of both cavity Hamiltonians.
    #[arg(long)]
    m: Option<f64>,

    /// Cavity-field coupling rate (both cavities).
    #[arg(long)]
    kappa: Option<f64>,

    /// Feedback gain g.
    #[arg(long)]
    gain: Option<f64>,

    /// Feedback coefficients: "design" (Riccati-optimal) or four
    /// comma-separated values over (q1, p1, q2, p2).
    #[arg(long)]
    f: Option<String>,

    /// Beam-splitter transmissivity (realistic network).
    #[arg(long)]
    alpha: Option<f64>,

    /// Detector low-pass time constant (realistic network).
    #[arg(long)]
    tau: Option<f64>,

    /// Detector noise intensity (realistic network).
    #[arg(long)]
    a4: Option<f64>,

    /// Initial covariance: a scalar c (cavities start at c*I, the detector
    /// coordinate at 0) or 16 (ideal) / 25 (realistic) comma-separated
    /// row-major entries.
    #[arg(long)]
    v0: Option<String>,

    /// Integration horizon.
    #[arg(long = "t-end")]
    t_end: Option<f64>,

    /// Integration step.
    #[arg(long)]
    dt: Option<f64>,

    /// Emit every Nth integration step.
    #[arg(long)]
    stride: Option<usize>,

    /// Output file (default: stdout).
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,

    /// Cross-check the cascade-algebra construction against the closed-form
    /// matrices (tolerance 1e-10) before running.
    #[arg(long)]
    check_dual: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate the covariance trajectory and emit per-step metrics.
    Simulate {
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Solve for the stationary covariance (requires a stable closed loop).
    Steady {
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Solve the feedback-design Riccati equation and print the coefficient
    /// vector (ideal network only).
    Design {
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Sweep one parameter and report steady-state metrics per value.
    Sweep {
        #[command(flatten)]
        common: CommonOpts,

        /// Swept parameter: g | tau | alpha.
        #[arg(long)]
        param: String,

        /// Comma-separated, strictly ordered values.
        #[arg(long)]
        values: String,
    },
    /// Write the CSV bundle behind one of the reference figures (2-6).
    Figure {
        /// Figure number.
        #[arg(long, value_parser = clap::value_parser!(u8).range(2..=6))]
        id: u8,

        /// Directory for the generated files.
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Simulate { common } => {
            let cfg = config::RunConfig::from_opts(&common)?;
            commands::simulate(&cfg, common.out.as_deref(), common.check_dual)
        }
        Command::Steady { common } => {
            let cfg = config::RunConfig::from_opts(&common)?;
            commands::steady(&cfg, common.out.as_deref(), common.check_dual)
        }
        Command::Design { common } => {
            let cfg = config::RunConfig::from_opts(&common)?;
            commands::design(&cfg)
        }
        Command::Sweep {
            common,
            param,
            values,
        } => {
            let cfg = config::RunConfig::from_opts(&common)?;
            commands::sweep(&cfg, &param, &values, common.out.as_deref(), common.check_dual)
        }
        Command::Figure { id, out_dir } => commands::figure(id, &out_dir),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Numeric(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}
