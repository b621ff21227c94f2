//! `svbeam`: plan, simulate and verify secure virtual beamforming setups.

mod commands;
mod manifest;
mod sweep;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use svbeam_core::Stage2Mode;

#[derive(Parser, Debug)]
#[command(name = "svbeam", version, about = "Secrecy planning and Monte Carlo checks for stochastic virtual beamforming")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Compute the design parameters for a target rate and outage.
    Plan(PlanArgs),
    /// Run Monte Carlo trials of a saved plan.
    Simulate(SimulateArgs),
    /// Check closed forms and bounds by sampling.
    Verify {
        #[command(subcommand)]
        which: VerifyCommand,
    },
    /// Plan over a grid of one parameter given as lo:hi:steps.
    Sweep(SweepArgs),
}

/// Scenario flags shared by `plan`.
#[derive(Args, Debug, Clone)]
pub struct ScenarioArgs {
    /// Target secure rate R_S in bits per channel use.
    #[arg(long)]
    pub rate: f64,
    /// Total outage probability epsilon, in (0, 1).
    #[arg(long)]
    pub outage: f64,
    /// Stage-1 rate split constant.
    #[arg(long, default_value_t = 1.0)]
    pub rho: f64,
    /// Stage-2 rate split constant.
    #[arg(long, default_value_t = 1.0)]
    pub kappa: f64,
    /// Transmit power P_T (noise power is 1).
    #[arg(long, default_value_t = 1.0)]
    pub power: f64,
    /// Rayleigh parameter, E{h^2} = 2 mu.
    #[arg(long, default_value_t = 0.5)]
    pub mu: f64,
    /// Path-loss exponent (>= 2).
    #[arg(long, default_value_t = 2.0)]
    pub gamma: f64,
    /// Transmitter-receiver distance.
    #[arg(long, default_value_t = 5.0)]
    pub dtr: f64,
    /// Number of legitimate nodes n_l, fixing the network side
    /// sqrt(n_l / lambda_l). By default the side is chosen so the expected
    /// eavesdropper count is half of n_e_max.
    #[arg(long)]
    pub nlegit: Option<u64>,
}

#[derive(Args, Debug)]
pub struct PlanArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    /// Write the plan document here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Stage2Arg {
    Auto,
    Explicit,
    Collapsed,
}

impl From<Stage2Arg> for Stage2Mode {
    fn from(v: Stage2Arg) -> Self {
        match v {
            Stage2Arg::Auto => Stage2Mode::Auto,
            Stage2Arg::Explicit => Stage2Mode::Explicit,
            Stage2Arg::Collapsed => Stage2Mode::Collapsed,
        }
    }
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    /// Plan document written by `svbeam plan`.
    #[arg(long)]
    pub plan: PathBuf,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub trials: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Per-trial CSV output.
    #[arg(long)]
    pub csv: PathBuf,
    /// Summary JSON output.
    #[arg(long)]
    pub json: PathBuf,
    /// Override the legitimate density of the plan document.
    #[arg(long)]
    pub lambda_l: Option<f64>,
    /// Override the eavesdropper density of the plan document.
    #[arg(long)]
    pub lambda_e: Option<f64>,
    /// How stage-2 relay-eavesdropper fading is sampled.
    #[arg(long, value_enum, default_value_t = Stage2Arg::Auto)]
    pub stage2: Stage2Arg,
}

#[derive(Subcommand, Debug)]
enum VerifyCommand {
    /// Received-power moments at unit distances against closed forms.
    Moments(VerifyMomentsArgs),
    /// Path-loss mean and variance bounds at a plan's geometry.
    Theorem4(VerifyTheorem4Args),
    /// The two moment inequalities on random distributions.
    Lemmas(VerifyLemmasArgs),
}

#[derive(Args, Debug)]
pub struct VerifyMomentsArgs {
    #[arg(long, default_value_t = 0.5)]
    pub mu: f64,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    pub nr: u64,
    #[arg(long, default_value_t = 1.0)]
    pub power: f64,
    #[arg(long, default_value_t = 1_000_000, value_parser = clap::value_parser!(u64).range(2..))]
    pub samples: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Write the report here as JSON.
    #[arg(long)]
    pub json: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct VerifyTheorem4Args {
    /// Plan document written by `svbeam plan`.
    #[arg(long)]
    pub plan: PathBuf,
    /// Override the relay count of the plan.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub nr: Option<u64>,
    /// Override the Rayleigh parameter of the plan's network.
    #[arg(long)]
    pub mu: Option<f64>,
    #[arg(long, default_value_t = 100_000, value_parser = clap::value_parser!(u64).range(2..))]
    pub samples: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub json: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct VerifyLemmasArgs {
    /// Samples per instance for the sampled check.
    #[arg(long, default_value_t = 100_000, value_parser = clap::value_parser!(u64).range(1..))]
    pub samples: u64,
    #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u64).range(1..))]
    pub instances: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub json: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    #[arg(long)]
    pub rate: String,
    #[arg(long)]
    pub outage: String,
    #[arg(long, default_value = "1")]
    pub rho: String,
    #[arg(long, default_value = "1")]
    pub kappa: String,
    #[arg(long, default_value = "1")]
    pub power: String,
    #[arg(long, default_value = "0.5")]
    pub mu: String,
    #[arg(long, default_value = "2")]
    pub gamma: String,
    #[arg(long, default_value = "5")]
    pub dtr: String,
    /// Legitimate density used for the reported network (defaults to the
    /// planned minimum at each point).
    #[arg(long)]
    pub lambda_l: Option<String>,
    /// CSV output (stdout when absent).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Plan(a) => commands::plan(&a),
        Command::Simulate(a) => commands::simulate(&a),
        Command::Verify { which } => match which {
            VerifyCommand::Moments(a) => commands::verify_moments(&a),
            VerifyCommand::Theorem4(a) => commands::verify_theorem4(&a),
            VerifyCommand::Lemmas(a) => commands::verify_lemmas(&a),
        },
        Command::Sweep(a) => sweep::run(&a),
    };
    match result {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            if err.downcast_ref::<commands::UsageError>().is_some() {
                ExitCode::from(commands::EXIT_USAGE)
            } else {
                ExitCode::from(commands::EXIT_FAILURE)
            }
        }
    }
}
