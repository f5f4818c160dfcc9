use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use shadowing_core::bounds::proof_quantities;
use shadowing_core::experiment::{
    curve_csv, default_attractor_config, default_dichotomy_configs, emit, emit_attractor, emit_dichotomy,
    estimate_probability, run_attractor_experiment, run_dichotomy_experiment, CheckerMode, ExperimentConfig, Literal,
};
use shadowing_core::io::{read_text, read_trajectory, trajectory_csv, verdict_json, write_text, write_trajectory};
use shadowing_core::pseudotraj::generate_trial;
use shadowing_core::scalar::parse_scalar;
use shadowing_core::shadowcheck::decide_shadowable;
use shadowing_core::{Exact, MapSystem, Scalar};

#[derive(Parser)]
#[command(name = "shadowing", version, about = "Random pseudotrajectories and their shadowability")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample one random d-pseudotrajectory and write it as CSV + JSON sidecar.
    Generate(GenerateArgs),
    /// Decide eps-shadowability of a stored pseudotrajectory.
    Check(CheckArgs),
    /// Monte Carlo estimate of the shadowing probability per horizon.
    Estimate(ExperimentArgs),
    /// Print delta, eta, cover times and attractor quantities as JSON.
    Bounds(BoundsArgs),
    /// Shadowing system against non-shadowing system, side by side.
    Dichotomy(ExperimentArgs),
    /// Containment and eps0-shadowing decay near the annulus attractor.
    Attractor(ExperimentArgs),
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long)]
    system: String,
    #[arg(long)]
    y0: String,
    #[arg(long)]
    d: String,
    /// Number of steps N.
    #[arg(long, short = 'n')]
    steps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0)]
    trial: u64,
    #[arg(long, default_value = "exact")]
    mode: CheckerMode,
    /// CSV path; the sidecar goes next to it. Prints CSV when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CheckArgs {
    /// Trajectory CSV with its JSON sidecar.
    #[arg(long)]
    input: PathBuf,
    /// Defaults to the system named in the sidecar.
    #[arg(long)]
    system: Option<String>,
    #[arg(long)]
    eps: String,
    #[arg(long, default_value = "exact")]
    mode: CheckerMode,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BoundsArgs {
    #[arg(long)]
    system: String,
    #[arg(long)]
    d: String,
    #[arg(long)]
    eps: String,
    /// Start point, needed for attractor quantities.
    #[arg(long)]
    y0: Option<String>,
}

#[derive(Args, Default)]
struct ExperimentArgs {
    /// JSON config; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    system: Option<String>,
    #[arg(long)]
    y0: Option<String>,
    #[arg(long)]
    d: Option<String>,
    #[arg(long)]
    eps: Option<String>,
    /// Comma-separated, strictly increasing.
    #[arg(long, value_delimiter = ',')]
    horizons: Option<Vec<usize>>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    mode: Option<CheckerMode>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl ExperimentArgs {
    fn apply(&self, mut c: ExperimentConfig) -> Result<ExperimentConfig> {
        if let Some(s) = &self.system {
            c.system = s.clone();
        }
        if let Some(y0) = &self.y0 {
            c.y0 = y0.clone();
        }
        if let Some(d) = &self.d {
            c.d = Literal::new(d.as_str())?;
        }
        if let Some(eps) = &self.eps {
            c.eps = Literal::new(eps.as_str())?;
        }
        if let Some(h) = &self.horizons {
            c.horizons = h.clone();
        }
        if let Some(t) = self.trials {
            c.trials = t;
        }
        if let Some(s) = self.seed {
            c.seed = s;
        }
        if let Some(m) = self.mode {
            c.mode = m;
        }
        c.validate()?;
        Ok(c)
    }

    /// Config from `--config` if given, else `default`, then flags on top.
    fn resolve(&self, default: Option<ExperimentConfig>) -> Result<ExperimentConfig> {
        let base = match (&self.config, default) {
            (Some(path), _) => load_config(path)?,
            (None, Some(d)) => d,
            (None, None) => {
                let need = |v: &Option<String>, flag: &str| v.clone().with_context(|| format!("missing --{flag} (or --config)"));
                ExperimentConfig {
                    system: need(&self.system, "system")?,
                    y0: need(&self.y0, "y0")?,
                    d: Literal::new(need(&self.d, "d")?)?,
                    eps: Literal::new(need(&self.eps, "eps")?)?,
                    horizons: self.horizons.clone().context("missing --horizons (or --config)")?,
                    trials: self.trials.context("missing --trials (or --config)")?,
                    seed: self.seed.unwrap_or(0),
                    mode: CheckerMode::Exact,
                    fragment_cap: shadowing_core::enclosure::DEFAULT_FRAGMENT_CAP,
                }
            }
        };
        self.apply(base)
    }
}

fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = read_text(path)?;
    serde_json::from_str(&text).with_context(|| format!("invalid config {}", path.display()))
}

fn generate_cmd(args: &GenerateArgs) -> Result<()> {
    match args.mode {
        CheckerMode::Exact => generate_with::<Exact>(args),
        CheckerMode::Outer => generate_with::<f64>(args),
    }
}

fn generate_with<S: Scalar>(args: &GenerateArgs) -> Result<()> {
    let system = MapSystem::<S>::parse(&args.system)?;
    let y0 = system.space().parse_point(&args.y0)?;
    let d: S = parse_scalar(&args.d)?;
    let traj = generate_trial(&system, &y0, &d, args.steps, args.seed, args.trial)?;
    match &args.out {
        Some(path) => write_trajectory(path, &args.system, &traj)?,
        None => print!("{}", trajectory_csv(&traj)),
    }
    Ok(())
}

fn check_cmd(args: &CheckArgs) -> Result<()> {
    match args.mode {
        CheckerMode::Exact => check_with::<Exact>(args),
        CheckerMode::Outer => check_with::<f64>(args),
    }
}

fn check_with<S: Scalar>(args: &CheckArgs) -> Result<()> {
    let spec = match &args.system {
        Some(s) => s.clone(),
        None => {
            let sidecar = read_text(&shadowing_core::io::sidecar_path(&args.input))?;
            let meta: shadowing_core::io::TrajectoryMeta = serde_json::from_str(&sidecar)?;
            meta.system
        }
    };
    let system = MapSystem::<S>::parse(&spec)?;
    let (_, traj) = read_trajectory(&args.input, system.space())?;
    let eps: S = parse_scalar(&args.eps)?;
    let verdict = decide_shadowable(&system, &traj, &eps)?;
    let json = verdict_json(&verdict.record())?;
    match &args.out {
        Some(path) => write_text(path, &json)?,
        None => print!("{json}"),
    }
    Ok(())
}

fn bounds_cmd(args: &BoundsArgs) -> Result<()> {
    let system = MapSystem::<Exact>::parse(&args.system)?;
    let d: Exact = parse_scalar(&args.d)?;
    let eps: Exact = parse_scalar(&args.eps)?;
    let y0 = args.y0.as_deref().map(|t| system.space().parse_point(t)).transpose()?;
    let report = proof_quantities(&system, &d, &eps, y0.as_ref())?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}

fn estimate_cmd(args: &ExperimentArgs) -> Result<()> {
    let config = args.resolve(None)?;
    let result = estimate_probability(&config)?;
    if let Some(dir) = &args.out {
        emit(&result, dir)?;
    }
    print!("{}", curve_csv(&result));
    Ok(())
}

fn dichotomy_cmd(args: &ExperimentArgs) -> Result<()> {
    if args.config.is_some() || args.system.is_some() || args.y0.is_some() {
        bail!("dichotomy runs the built-in pair; only --d, --eps, --horizons, --trials, --seed, --mode, --out apply");
    }
    let (a, b) = default_dichotomy_configs();
    let (a, b) = (args.apply(a)?, args.apply(b)?);
    let report = run_dichotomy_experiment(&a, &b)?;
    if let Some(dir) = &args.out {
        emit_dichotomy(&report, dir)?;
    }
    println!("horizon  p_hat({})  p_hat({})  bound", a.system, b.system);
    for row in &report.table {
        let fmt = |x: Option<f64>| x.map_or("-".to_string(), |v| format!("{v:.4}"));
        println!(
            "{:>7}  {:>8}  {:>8}  {}",
            row.horizon,
            fmt(row.p_hat_shadowing),
            fmt(row.p_hat_nonshadowing),
            fmt(row.bound_nonshadowing)
        );
    }
    Ok(())
}

fn attractor_cmd(args: &ExperimentArgs) -> Result<()> {
    let config = args.resolve(Some(default_attractor_config()))?;
    let report = run_attractor_experiment(&config)?;
    if let Some(dir) = &args.out {
        emit_attractor(&report, dir)?;
    }
    println!("{}", serde_json::to_string_pretty(&report.quantities)?);
    print!("{}", curve_csv(&report.result));
    Ok(())
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match &cli.command {
        Command::Generate(a) => generate_cmd(a),
        Command::Check(a) => check_cmd(a),
        Command::Estimate(a) => estimate_cmd(a),
        Command::Bounds(a) => bounds_cmd(a),
        Command::Dichotomy(a) => dichotomy_cmd(a),
        Command::Attractor(a) => attractor_cmd(a),
    }
}
