//! `encctl`: calibrate, co-design, simulate, and verify encrypted control
//! loops from a single JSON configuration.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "encctl",
    about = "Co-design of lattice cryptosystem parameters and delay-aware state feedback",
    version
)]
struct Cli {
    /// Override every seed in the configuration (solver and simulation).
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory for generated artifacts.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Time the cryptographic operations on this machine and write fitted
    /// cost constants plus the raw measurement CSV.
    Calibrate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Search for a (parameter set, gain) pair meeting the security, delay,
    /// and stability requirements; writes the result and an audit log.
    Codesign {
        #[arg(long)]
        config: PathBuf,
    },
    /// Simulate the closed loop and write trajectory/event CSVs.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Gain to simulate (name from the config; default: first).
        #[arg(long)]
        gain: Option<String>,
        /// Delay as a fraction of the first candidate's delay bound;
        /// overrides the config's delay list.
        #[arg(long)]
        tau_frac: Option<f64>,
        /// Absolute delay in seconds; overrides the config's delay list.
        #[arg(long)]
        tau_s: Option<f64>,
    },
    /// Check a Lyapunov matrix against the vertex LMIs of a candidate and
    /// gain; writes the verification report.
    Verify {
        #[arg(long)]
        config: PathBuf,
        /// JSON file holding the symmetric matrix P as nested rows.
        #[arg(long)]
        p_matrix: PathBuf,
        #[arg(long)]
        gain: Option<String>,
        /// Candidate label (default: first).
        #[arg(long)]
        theta: Option<String>,
    },
}

/// Process failure with its exit code: 2 validation, 3 no feasible pair,
/// 4 runtime/overflow.
#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn validation(message: String) -> Self {
        CliError { code: 2, message }
    }

    pub fn from_validation(e: impl std::fmt::Display) -> Self {
        CliError {
            code: 2,
            message: e.to_string(),
        }
    }

    pub fn runtime(message: String) -> Self {
        CliError { code: 4, message }
    }

    pub fn no_feasible_pair() -> Self {
        CliError {
            code: 3,
            message: "no feasible (theta, K) pair".into(),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Calibrate { config } => commands::calibrate(config, &cli.out),
        Command::Codesign { config } => commands::codesign(config, &cli.out, cli.seed),
        Command::Simulate {
            config,
            gain,
            tau_frac,
            tau_s,
        } => commands::simulate(
            config,
            &cli.out,
            cli.seed,
            gain.as_deref(),
            *tau_frac,
            *tau_s,
        ),
        Command::Verify {
            config,
            p_matrix,
            gain,
            theta,
        } => commands::verify(
            config,
            p_matrix,
            &cli.out,
            gain.as_deref(),
            theta.as_deref(),
        ),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
