//! `dgmbb`: run, compare and sweep distributed gradient methods from TOML
//! plans, evaluate convergence certificates, and generate problem data.
//!
//! Exit status: 0 when every run completed and every invariant held, 1 when
//! a run diverged or an invariant failed, 2 for usage, configuration and I/O
//! errors.

mod commands;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "dgmbb", version, about = "Distributed gradient methods with local Barzilai-Borwein steps")]
struct Cli {
    /// More log output (-v info, -vv debug); `RUST_LOG` overrides.
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one method entry of a plan.
    Run(RunArgs),
    /// Run every method entry of a plan and rank them.
    Compare(CompareArgs),
    /// Sweep α₀ or the inner consensus rounds R.
    Sweep(SweepArgs),
    /// Evaluate the convergence certificate for a problem and network.
    Theory(TheoryArgs),
    /// Write instances, graphs, weights or a plan template.
    #[command(subcommand)]
    Generate(GenerateCommand),
}

#[derive(Debug, Args)]
pub struct PlanArgs {
    /// Experiment plan (TOML, `schema_version = 1`).
    pub plan: PathBuf,
    /// Output directory for CSVs and summary.json (overrides the plan).
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    /// Plan seed override.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub max_iters: Option<usize>,
    /// Stopping accuracy on the relative error.
    #[arg(long)]
    pub target: Option<f64>,
    /// Accuracy at which the summary table reports iterations and cost.
    #[arg(long, default_value_t = 1e-8)]
    pub at: f64,
    /// Print the summary as JSON instead of a table.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub plan: PlanArgs,
    /// Label (or method name) of the entry to run; defaults to the first.
    #[arg(short, long)]
    pub method: Option<String>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub plan: PlanArgs,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub plan: PlanArgs,
    /// Comma-separated α₀ values (DGM-BB-C entries).
    #[arg(long, value_delimiter = ',', num_args = 1.., conflicts_with = "rounds", required_unless_present = "rounds")]
    pub alpha0: Vec<f64>,
    /// Comma-separated R values (DGM-BB-C and DGM-C entries).
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    pub rounds: Vec<usize>,
}

#[derive(Debug, Args)]
pub struct TheoryArgs {
    /// Take L, μ, n and δ from a plan's problem and network.
    #[arg(long, conflicts_with_all = ["lipschitz", "mu", "n", "delta"])]
    pub plan: Option<PathBuf>,
    #[arg(long = "L", value_name = "L", required_unless_present = "plan")]
    pub lipschitz: Option<f64>,
    #[arg(long, required_unless_present = "plan")]
    pub mu: Option<f64>,
    #[arg(long, required_unless_present = "plan")]
    pub n: Option<usize>,
    /// Spectral gap ‖W − (1/n)11ᵀ‖₂ of the mixing matrix.
    #[arg(long, required_unless_present = "plan")]
    pub delta: Option<f64>,
    /// Inner consensus rounds; defaults to R_min.
    #[arg(long)]
    pub rounds: Option<usize>,
    /// Largest step; defaults to 1/μ.
    #[arg(long)]
    pub alpha_max: Option<f64>,
    /// Evaluate Δ, R_min and α̂ for this c = c1,c2,c3 instead of the selected one.
    #[arg(long, value_delimiter = ',')]
    pub c: Vec<f64>,
    /// Exit 1 unless the configuration is certified (ρ < 1 and R ≥ R_min).
    #[arg(long)]
    pub require_admissible: bool,
}

#[derive(Debug, Subcommand)]
pub enum GenerateCommand {
    /// Least-squares sensing instance (JSON).
    Instance {
        #[arg(long, default_value_t = 200)]
        n: usize,
        #[arg(long, default_value_t = 20)]
        m: usize,
        #[arg(long, default_value_t = 10)]
        p: usize,
        #[arg(long = "L", value_name = "L", default_value_t = 1.0)]
        lipschitz: f64,
        #[arg(long, default_value_t = 0.5)]
        mu: f64,
        #[arg(long, default_value_t = dgmbb_core::objective::DEFAULT_NOISE)]
        noise: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Connected Erdős–Rényi graph (JSON), or its Metropolis weights.
    Graph {
        #[arg(long, default_value_t = 200)]
        n: usize,
        #[arg(long, default_value_t = 0.1)]
        r_c: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write the Metropolis weight matrix instead of the edge list.
        #[arg(long)]
        weights: bool,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Plan template for the 200-agent benchmark with every method.
    Plan {
        #[arg(long, default_value_t = 0.1)]
        r_c: f64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

/// How a command ended; errors are reported separately.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Ok,
    Failed,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    let result = match cli.command {
        Command::Run(a) => commands::run(a),
        Command::Compare(a) => commands::compare(a),
        Command::Sweep(a) => commands::sweep(a),
        Command::Theory(a) => commands::theory(a),
        Command::Generate(g) => commands::generate(g),
    };
    match result {
        Ok(Status::Ok) => ExitCode::SUCCESS,
        Ok(Status::Failed) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
