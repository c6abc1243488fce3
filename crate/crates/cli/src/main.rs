//! Command-line laboratory for the damped quantum oscillator: coefficient
//! tables, transient dynamics of every description, steady-state
//! comparisons and fidelity maps, all emitted as deterministic CSV.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{parse_variant_list, RunConfig, VariantSpec};

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Numerical(String),
}

#[derive(Parser)]
#[command(
    name = "oscbath",
    about = "Damped quantum oscillator: exact dynamics vs weak-coupling master equations",
    long_about = "Simulates a damped quantum harmonic oscillator under the exact Langevin \
                  dynamics, the non-secular Redfield equation, the secular GKLS equation and \
                  the shifted Lamb-shift-free variant, and compares their covariances and \
                  steady states through the Gaussian Uhlmann fidelity. All quantities are in \
                  natural units hbar = k_B = m = 1; frequencies are conventionally quoted in \
                  units of omega0 = 1."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Sectioned key=value configuration file; flags override it
    #[arg(long)]
    config: Option<PathBuf>,
    /// Bare oscillator frequency (> 0); rescales all outputs
    #[arg(long)]
    omega0: Option<f64>,
    /// Coupling strength (>= 0)
    #[arg(long)]
    lambda: Option<f64>,
    /// Bath cutoff frequency (> 0)
    #[arg(long)]
    cutoff: Option<f64>,
    /// Bath temperature (>= 0)
    #[arg(long)]
    temperature: Option<f64>,
    /// Physical Hamiltonian carries the counter term
    #[arg(long)]
    counter_term: Option<bool>,
    /// Keep the Lamb-shift terms in the master equation
    #[arg(long)]
    lamb_shift: Option<bool>,
    /// Apply the secular approximation
    #[arg(long)]
    secular: Option<bool>,
    /// Restrict the run to one method (exact|redfield|gkls)
    #[arg(long)]
    method: Option<String>,
    /// Variant list, e.g. "exact; redfield+ls; gkls+shifted+nols"
    #[arg(long)]
    variants: Option<String>,
    /// Output file path
    #[arg(long)]
    out: Option<PathBuf>,
    /// Absolute tolerance for the quadratures
    #[arg(long)]
    tol: Option<f64>,
    /// End of the time grid
    #[arg(long)]
    t_max: Option<f64>,
    /// Number of time-grid points (>= 2)
    #[arg(long)]
    n_points: Option<usize>,
    /// Evolve unstable variants for finite times instead of failing
    #[arg(long)]
    allow_unstable: bool,
    /// Sweep: lowest temperature
    #[arg(long)]
    temp_min: Option<f64>,
    /// Sweep: highest temperature
    #[arg(long)]
    temp_max: Option<f64>,
    /// Sweep: temperature grid size
    #[arg(long)]
    temp_points: Option<usize>,
    /// Sweep: logarithmic temperature axis
    #[arg(long)]
    temp_log: Option<bool>,
    /// Sweep: lowest coupling
    #[arg(long)]
    lambda_min: Option<f64>,
    /// Sweep: highest coupling
    #[arg(long)]
    lambda_max: Option<f64>,
    /// Sweep: coupling grid size
    #[arg(long)]
    lambda_points: Option<usize>,
    /// Sweep: logarithmic coupling axis
    #[arg(long)]
    lambda_log: Option<bool>,
}

#[derive(Subcommand)]
enum Command {
    /// Print the bath and master-equation coefficient table
    Coefficients(CommonArgs),
    /// Integrate the covariance dynamics of every variant and write CSV
    Dynamics(CommonArgs),
    /// Steady-state covariances and fidelities against the exact state
    Steady(CommonArgs),
    /// Sweep (T, lambda) and write the steady-state fidelity map as CSV
    #[command(name = "fidelity-map")]
    FidelityMap(CommonArgs),
}

fn build_config(args: &CommonArgs) -> Result<RunConfig, CliError> {
    let mut cfg = RunConfig::default();

    if let Some(path) = &args.config {
        let text = std::fs::read_to_string(path).map_err(|e| {
            CliError::Config(format!("cannot read {}: {e}", path.display()))
        })?;
        cfg.apply_file(&text, &path.display().to_string())
            .map_err(|e| CliError::Config(e.to_string()))?;
    }

    if let Some(v) = args.omega0 {
        cfg.model.omega0 = v;
    }
    if let Some(v) = args.lambda {
        cfg.model.lambda = v;
    }
    if let Some(v) = args.cutoff {
        cfg.model.cutoff = v;
    }
    if let Some(v) = args.temperature {
        cfg.model.temperature = v;
    }
    if let Some(v) = args.counter_term {
        cfg.model.counter_term = v;
    }
    if let Some(v) = args.lamb_shift {
        cfg.model.lamb_shift = v;
    }
    if let Some(v) = args.secular {
        cfg.model.secular = v;
    }
    if let Some(list) = &args.variants {
        cfg.variants = parse_variant_list(list).map_err(|e| CliError::Config(e.to_string()))?;
    }
    if let Some(m) = &args.method {
        // single-variant run with the model's own structural flags
        let spec = match m.as_str() {
            "exact" => VariantSpec::parse("exact"),
            "redfield" => VariantSpec::parse("redfield"),
            "gkls" => VariantSpec::parse("gkls"),
            other => Err(config::ConfigError(format!(
                "unknown method '{other}' (expected exact|redfield|gkls)"
            ))),
        }
        .map_err(|e| CliError::Config(e.to_string()))?;
        cfg.variants = vec![spec];
    }
    if let Some(v) = &args.out {
        cfg.out = Some(v.clone());
    }
    if let Some(v) = args.tol {
        cfg.tol = Some(v);
    }
    if let Some(v) = args.t_max {
        cfg.t_max = v;
    }
    if let Some(v) = args.n_points {
        cfg.n_points = v;
    }
    if args.allow_unstable {
        cfg.allow_unstable = true;
    }
    if let Some(v) = args.temp_min {
        cfg.temperature_axis.min = v;
    }
    if let Some(v) = args.temp_max {
        cfg.temperature_axis.max = v;
    }
    if let Some(v) = args.temp_points {
        cfg.temperature_axis.points = v;
    }
    if let Some(v) = args.temp_log {
        cfg.temperature_axis.log = v;
    }
    if let Some(v) = args.lambda_min {
        cfg.lambda_axis.min = v;
    }
    if let Some(v) = args.lambda_max {
        cfg.lambda_axis.max = v;
    }
    if let Some(v) = args.lambda_points {
        cfg.lambda_axis.points = v;
    }
    if let Some(v) = args.lambda_log {
        cfg.lambda_axis.log = v;
    }

    cfg.validate().map_err(|e| CliError::Config(e.to_string()))?;
    Ok(cfg)
}

fn run() -> Result<(), CliError> {
    let cli = Cli::parse();
    match &cli.command {
        Command::Coefficients(a) => commands::cmd_coefficients(&build_config(a)?),
        Command::Dynamics(a) => commands::cmd_dynamics(&build_config(a)?),
        Command::Steady(a) => commands::cmd_steady(&build_config(a)?),
        Command::FidelityMap(a) => commands::cmd_fidelity_map(&build_config(a)?),
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Numerical(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}
