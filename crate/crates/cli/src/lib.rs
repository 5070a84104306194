//! Library side of the `trajopt` command: argument definitions, file formats and commands.

pub mod commands;
pub mod files;
pub mod verify;

use std::path::PathBuf;

use clap::{ArgGroup, Parser, Subcommand, ValueEnum};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    Parse(String),
    #[error("{0}")]
    Domain(String),
    #[error("verification failed")]
    Verification,
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Io(_) => 1,
            CliError::Parse(_) => 2,
            CliError::Domain(_) => 3,
            CliError::Verification => 4,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "trajopt", version, about = "Minimal-cost unitary trajectories")]
pub struct Cli {
    /// Override the instance's population tolerance.
    #[arg(long, global = true)]
    pub eps_pop: Option<f64>,
    /// Override the instance's gradient tie tolerance.
    #[arg(long, global = true)]
    pub eps_grad: Option<f64>,
    /// Seed for sampling.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Demo {
    WorkingExample,
    Incoherent,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build the optimal trajectory and write it as JSON.
    Build {
        instance: PathBuf,
        /// Start at the instance's initial populations (which must be a vertex) rather than at
        /// the minimal vertex.
        #[arg(long)]
        from_initial: bool,
        /// Output path (stdout if omitted).
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Print the minimal cost function as CSV (alpha,omega,work).
    #[command(group(ArgGroup::new("at").required(true).args(["alpha", "grid"])))]
    Eval {
        instance: PathBuf,
        #[arg(long, allow_negative_numbers = true)]
        alpha: Option<f64>,
        /// Number of evenly spaced points; breakpoints are always added.
        #[arg(long)]
        grid: Option<usize>,
    },
    /// Emit the unitary and doubly-stochastic matrix reaching the trajectory point at `alpha`.
    Lift {
        instance: PathBuf,
        #[arg(long, allow_negative_numbers = true)]
        alpha: f64,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Check a trajectory against brute-force oracles.
    Verify {
        instance: PathBuf,
        /// Trajectory file to check instead of a fresh build.
        #[arg(long)]
        trajectory: Option<PathBuf>,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
    },
    /// Emit a cooling instance file.
    Cool {
        #[arg(long, value_enum, conflicts_with_all = ["system_energies", "machine_energies"])]
        demo: Option<Demo>,
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true, required_unless_present = "demo")]
        system_energies: Vec<f64>,
        /// Initial system populations (thermal at --beta when omitted).
        #[arg(long, value_delimiter = ',')]
        system_populations: Vec<f64>,
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true, required_unless_present = "demo")]
        machine_energies: Vec<f64>,
        /// Machine inverse temperature.
        #[arg(long, default_value_t = 1.0)]
        beta: f64,
        /// Bath energies; switches to the energy-conserving three-party scenario.
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        bath_energies: Vec<f64>,
        #[arg(long, default_value_t = 0.0)]
        beta_bath: f64,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
}
