//! `unambig`: solve, synthesize and simulate optimal unambiguous
//! discrimination networks from the command line.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "unambig", version, about = "Optimal unambiguous state discrimination and its optical multiport")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    config: Config,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Compute the optimal failure probabilities; writes solution.json.
    Solve,
    /// Build the multiport; writes unitary.json, network.json and network.txt.
    Synthesize,
    /// Detector statistics of a network; writes report.json.
    Simulate,
    /// solve, synthesize and simulate in one run.
    Pipeline,
    /// Check input documents without writing anything.
    Validate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SolverArg {
    Auto,
    Analytic,
    Numeric,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    FullSweep,
    TransposeShortcut,
}

/// Every flag can also be set through the `UNAMBIG_*` variable shown.
#[derive(Debug, Clone, Args)]
pub struct Config {
    /// Ensemble document.
    #[arg(long, short, global = true, env = "UNAMBIG_INPUT")]
    pub input: Option<PathBuf>,

    /// Directory for the documents written.
    #[arg(long, short, global = true, env = "UNAMBIG_OUT_DIR", default_value = ".")]
    pub out_dir: PathBuf,

    #[arg(long, global = true, env = "UNAMBIG_SOLVER", value_enum, default_value_t = SolverArg::Auto)]
    pub solver: SolverArg,

    /// Factorization used for network.json.
    #[arg(long, global = true, env = "UNAMBIG_MODE", value_enum, default_value_t = ModeArg::FullSweep)]
    pub mode: ModeArg,

    /// Monte Carlo shots; 0 reports exact probabilities only.
    #[arg(long, global = true, env = "UNAMBIG_SHOTS", default_value_t = 0)]
    pub shots: u64,

    #[arg(long, global = true, env = "UNAMBIG_SEED", default_value_t = 0)]
    pub seed: u64,

    /// Second-stage network on the failure ports.
    #[arg(long, global = true, env = "UNAMBIG_CASCADE")]
    pub cascade: Option<PathBuf>,

    /// Use this solution instead of solving.
    #[arg(long, global = true, env = "UNAMBIG_SOLUTION")]
    pub solution: Option<PathBuf>,

    /// Network document to simulate or validate.
    #[arg(long, global = true, env = "UNAMBIG_NETWORK")]
    pub network: Option<PathBuf>,

    /// Unitary document to simulate or validate.
    #[arg(long, global = true, env = "UNAMBIG_UNITARY")]
    pub unitary: Option<PathBuf>,

    /// Most negative eigenvalue of C accepted as PSD.
    #[arg(long, global = true, env = "UNAMBIG_TOL_PSD", default_value_t = 1e-10, value_parser = tolerance)]
    pub tol_psd: f64,

    /// Largest entry of M^H M - I accepted as unitary.
    #[arg(long, global = true, env = "UNAMBIG_TOL_UNITARY", default_value_t = 1e-10, value_parser = tolerance)]
    pub tol_unitary: f64,
}

fn tolerance(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v > 0.0 && v < 1e-3 {
        Ok(v)
    } else {
        Err(format!("tolerance must lie in (0, 1e-3), got {v}"))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Solve => commands::solve(&cli.config),
        Command::Synthesize => commands::synthesize(&cli.config),
        Command::Simulate => commands::simulate(&cli.config),
        Command::Pipeline => commands::pipeline(&cli.config),
        Command::Validate => commands::validate(&cli.config),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
