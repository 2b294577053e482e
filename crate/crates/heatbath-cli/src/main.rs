//! Flag parsing and exit-code mapping for the `heatbath` binary.
//!
//! Exit codes: 0 all checks passed, 1 I/O failure, 2 invalid config or
//! parameters, 3 at least one acceptance check failed, 4 numerical-solver
//! failure. Flag names mirror config keys (`--tau-bar` ↔ `params.tau_bar`,
//! `--T` ↔ `run.T`), and a flag always overrides the config file value.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use heatbath_cli::commands::{self, Ctx};
use heatbath_cli::config::ExperimentConfig;
use heatbath_cli::manifest::Manifest;
use heatbath_cli::{output, CliError, VERSION};

#[derive(Parser)]
#[command(name = "heatbath", version = VERSION)]
#[command(about = "Simulation and audit runner for the collision-diffusion toolkit")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct GlobalArgs {
    /// Experiment config (.toml or .json); flags override its values.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// RNG seed; the same config and seed give byte-identical artifacts.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Directory for CSV artifacts and the run manifest (default: out).
    #[arg(long, global = true, value_name = "DIR")]
    out_dir: Option<PathBuf>,
    /// Worker threads for ensemble computations (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Audit momentum/energy conservation over Haar-random collision events.
    Collide(CollideArgs),
    /// Measure the strong-convergence rate of collision paths to diffusion.
    Converge(ConvergeArgs),
    /// Evolve a wave field and audit total-energy conservation.
    Conserve(ConserveArgs),
    /// Compare Gamma-clock sample moments against their closed forms.
    Clock(ClockArgs),
    /// Estimate the Brownian energy-shedding rate along collision paths.
    Radiate(RadiateArgs),
    /// Evaluate the Gaussian-packet energy ledger and its limits.
    Packet(PacketArgs),
    /// Check interval identities, boosts, and the time-dilation experiment.
    Minkowski(MinkowskiArgs),
    /// Audit the heat-bath shock covariance with and without scattering.
    Scatter(ScatterArgs),
}

#[derive(Args)]
struct CollideArgs {
    /// Mass ratio γ = √(m/M).
    #[arg(long)]
    gamma: Option<f64>,
    /// Spatial dimension (1–3).
    #[arg(long)]
    n: Option<usize>,
    /// Number of collision events.
    #[arg(long)]
    samples: Option<usize>,
}

#[derive(Args)]
struct ConvergeArgs {
    /// Drift field for the paths.
    #[arg(long, value_parser = ["zero", "constant", "ou"])]
    drift: Option<String>,
    /// OU relaxation rate (with --drift ou).
    #[arg(long)]
    rate: Option<f64>,
    /// Constant drift components (with --drift constant).
    #[arg(long, value_delimiter = ',')]
    value: Option<Vec<f64>>,
    /// Clock rates β to sweep, strictly increasing.
    #[arg(long, value_delimiter = ',')]
    betas: Option<Vec<f64>>,
    /// Paths per clock rate.
    #[arg(long)]
    samples: Option<usize>,
    /// Path horizon.
    #[arg(long = "T")]
    t_final: Option<f64>,
    /// Mass ratio γ = √(m/M).
    #[arg(long)]
    gamma: Option<f64>,
}

#[derive(Args)]
struct ConserveArgs {
    /// Potential on the grid.
    #[arg(long, value_parser = ["zero", "linear", "harmonic"])]
    potential: Option<String>,
    /// Harmonic stiffness (with --potential harmonic).
    #[arg(long)]
    k: Option<f64>,
    /// Linear slope (with --potential linear).
    #[arg(long)]
    slope: Option<f64>,
    /// Initial state: two-eigenstate superposition, displaced ground
    /// state, or Gaussian packet.
    #[arg(long, value_parser = ["superposition", "coherent", "packet"])]
    state: Option<String>,
    /// Evolution horizon.
    #[arg(long = "T")]
    t_final: Option<f64>,
    /// Crank–Nicolson step.
    #[arg(long)]
    dt: Option<f64>,
    /// Grid spacing.
    #[arg(long)]
    dx: Option<f64>,
    /// Center of the displaced ground state (with --state coherent).
    #[arg(long)]
    x0: Option<f64>,
    /// Two-step scattering amplitude; 0 runs the unscaled solver.
    #[arg(long)]
    nu: Option<f64>,
    /// Mass ratio γ = √(m/M).
    #[arg(long)]
    gamma: Option<f64>,
}

#[derive(Args)]
struct ClockArgs {
    /// Mean inter-collision time τ̄ (β = 2/τ̄).
    #[arg(long)]
    tau_bar: Option<f64>,
    /// Clock draws.
    #[arg(long)]
    samples: Option<usize>,
}

#[derive(Args)]
struct RadiateArgs {
    /// Mean inter-collision time τ̄ (default 0.01 here).
    #[arg(long)]
    tau_bar: Option<f64>,
    /// Observation times, each at least 10τ̄.
    #[arg(long, value_delimiter = ',')]
    times: Option<Vec<f64>>,
    /// Paths in the ensemble.
    #[arg(long)]
    samples: Option<usize>,
    /// Mass ratio γ = √(m/M).
    #[arg(long)]
    gamma: Option<f64>,
}

#[derive(Args)]
struct PacketArgs {
    /// Mass ratio γ = √(m/M).
    #[arg(long)]
    gamma: Option<f64>,
    /// Initial mean momentum.
    #[arg(long)]
    p0: Option<f64>,
    /// Initial packet width.
    #[arg(long)]
    sigma_e: Option<f64>,
    /// Evaluation times.
    #[arg(long, value_delimiter = ',')]
    times: Option<Vec<f64>>,
    /// Quadrature grid spacing.
    #[arg(long)]
    dx: Option<f64>,
}

#[derive(Args)]
struct MinkowskiArgs {
    /// Mass ratio γ = √(m/M).
    #[arg(long)]
    gamma: Option<f64>,
    /// Increment correlations ρ_Δ to test, each in [0, 1).
    #[arg(long, value_delimiter = ',')]
    rhos: Option<Vec<f64>>,
    /// Draws per dilation experiment.
    #[arg(long)]
    samples: Option<usize>,
    /// Speed scale (default: the bath's equilibrium speed).
    #[arg(long)]
    c: Option<f64>,
}

#[derive(Args)]
struct ScatterArgs {
    /// Mass ratio γ = √(m/M).
    #[arg(long)]
    gamma: Option<f64>,
    /// Two-step scattering amplitude.
    #[arg(long)]
    nu: Option<f64>,
    /// Shock-pair draws per phase.
    #[arg(long)]
    samples: Option<usize>,
    /// Spatial dimension (must be 2 for the two-step ensemble).
    #[arg(long)]
    n: Option<usize>,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Collide(_) => "collide",
            Command::Converge(_) => "converge",
            Command::Conserve(_) => "conserve",
            Command::Clock(_) => "clock",
            Command::Radiate(_) => "radiate",
            Command::Packet(_) => "packet",
            Command::Minkowski(_) => "minkowski",
            Command::Scatter(_) => "scatter",
        }
    }

    fn apply_overrides(&self, cfg: &mut ExperimentConfig) {
        fn set<T>(slot: &mut Option<T>, value: &Option<T>)
        where
            T: Clone,
        {
            if value.is_some() {
                *slot = value.clone();
            }
        }
        match self {
            Command::Collide(a) => {
                set(&mut cfg.params.gamma, &a.gamma);
                set(&mut cfg.params.n, &a.n);
                set(&mut cfg.run.samples, &a.samples);
            }
            Command::Converge(a) => {
                if let Some(kind) = &a.drift {
                    cfg.drift.kind = kind.clone();
                }
                set(&mut cfg.drift.rate, &a.rate);
                set(&mut cfg.drift.value, &a.value);
                set(&mut cfg.run.betas, &a.betas);
                set(&mut cfg.run.samples, &a.samples);
                set(&mut cfg.run.t_final, &a.t_final);
                set(&mut cfg.params.gamma, &a.gamma);
            }
            Command::Conserve(a) => {
                if let Some(kind) = &a.potential {
                    cfg.potential.kind = kind.clone();
                }
                set(&mut cfg.potential.k, &a.k);
                set(&mut cfg.potential.slope, &a.slope);
                set(&mut cfg.run.state, &a.state);
                set(&mut cfg.run.t_final, &a.t_final);
                set(&mut cfg.run.dt, &a.dt);
                set(&mut cfg.run.dx, &a.dx);
                set(&mut cfg.run.x0, &a.x0);
                set(&mut cfg.run.nu, &a.nu);
                set(&mut cfg.params.gamma, &a.gamma);
            }
            Command::Clock(a) => {
                set(&mut cfg.params.tau_bar, &a.tau_bar);
                set(&mut cfg.run.samples, &a.samples);
            }
            Command::Radiate(a) => {
                set(&mut cfg.params.tau_bar, &a.tau_bar);
                set(&mut cfg.run.times, &a.times);
                set(&mut cfg.run.samples, &a.samples);
                set(&mut cfg.params.gamma, &a.gamma);
            }
            Command::Packet(a) => {
                set(&mut cfg.params.gamma, &a.gamma);
                set(&mut cfg.run.p0, &a.p0);
                set(&mut cfg.run.sigma_e, &a.sigma_e);
                set(&mut cfg.run.times, &a.times);
                set(&mut cfg.run.dx, &a.dx);
            }
            Command::Minkowski(a) => {
                set(&mut cfg.params.gamma, &a.gamma);
                set(&mut cfg.run.rhos, &a.rhos);
                set(&mut cfg.run.samples, &a.samples);
                set(&mut cfg.run.c, &a.c);
            }
            Command::Scatter(a) => {
                set(&mut cfg.params.gamma, &a.gamma);
                set(&mut cfg.run.nu, &a.nu);
                set(&mut cfg.run.samples, &a.samples);
                set(&mut cfg.params.n, &a.n);
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(3),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(cli: Cli) -> Result<bool, CliError> {
    if let Some(threads) = cli.global.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| CliError::Config(format!("threads: {e}")))?;
    }

    let name = cli.command.name();
    let mut cfg = match &cli.global.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::new(name),
    };
    if cfg.experiment != name {
        return Err(CliError::Config(format!(
            "experiment: config file describes '{}' but the '{}' subcommand was invoked",
            cfg.experiment, name
        )));
    }
    if cli.global.seed.is_some() {
        cfg.run.seed = cli.global.seed;
    }
    if cli.global.out_dir.is_some() {
        cfg.run.out_dir = cli.global.out_dir.clone();
    }
    cli.command.apply_overrides(&mut cfg);

    // Freeze the resolved seed and output directory into the config echoed
    // by the manifest, so a manifest alone reproduces the run.
    let seed = cfg.seed();
    cfg.run.seed = Some(seed);
    let out_dir = cfg.run.out_dir.clone().unwrap_or_else(|| PathBuf::from("out"));
    cfg.run.out_dir = Some(out_dir.clone());
    fs::create_dir_all(&out_dir)
        .map_err(|e| CliError::Io(format!("{}: {e}", out_dir.display())))?;

    let ctx = Ctx { cfg: &cfg, seed, out_dir: &out_dir };
    let report = commands::run(name, &ctx)?;

    let manifest = Manifest::new(VERSION, seed, cfg, report.checks, report.artifacts);
    let manifest_path = out_dir.join(format!("{name}_manifest.json"));
    manifest.write(&manifest_path)?;

    output::print_checks(&manifest.checks);
    output::say(format_args!("manifest: {}", manifest_path.display()));
    Ok(manifest.all_pass)
}
