use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use quadtune::campaign::{run_campaign, CampaignConfig};
use quadtune::report::{channel_reports, compare, read_trajectory_csv, render_comparison, simulate_to_dir};
use quadtune::{Algorithm, GainSet, ObjectiveWeights, ScenarioConfig};

#[derive(Parser)]
#[command(name = "quadtune", version, about = "Quadrotor PD gain tuning with BBO and PSO")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a tuning campaign.
    Tune(TuneArgs),
    /// Fly one gain set and write trajectory, cost and metrics.
    Simulate(SimulateArgs),
    /// Step metrics of a trajectory CSV.
    Metrics(MetricsArgs),
    /// Side-by-side comparison of several gain files.
    Compare(CompareArgs),
}

#[derive(Args)]
struct ScenarioArgs {
    /// Campaign config supplying the scenario and weights.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Bare scenario file; overrides the one in --config.
    #[arg(long)]
    scenario: Option<PathBuf>,
}

impl ScenarioArgs {
    fn resolve(&self) -> Result<(ScenarioConfig, ObjectiveWeights)> {
        let base = match &self.config {
            Some(p) => CampaignConfig::load(p)?,
            None => CampaignConfig::default(),
        };
        let scenario = match &self.scenario {
            Some(p) => ScenarioConfig::load(p).with_context(|| format!("reading {}", p.display()))?,
            None => base.scenario,
        };
        Ok((scenario, base.weights))
    }
}

#[derive(Args)]
struct TuneArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    algo: Option<Algorithm>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    iters: Option<usize>,
    #[arg(long)]
    pop: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    /// Gain file (JSON with Kp_phi ... Kd_z).
    #[arg(long)]
    gains: PathBuf,
    #[command(flatten)]
    scenario: ScenarioArgs,
    #[arg(long, default_value = "sim_out")]
    out: PathBuf,
}

#[derive(Args)]
struct MetricsArgs {
    trajectory: PathBuf,
    #[command(flatten)]
    scenario: ScenarioArgs,
    /// Write the JSON here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CompareArgs {
    #[arg(required = true, num_args = 2..)]
    gains: Vec<PathBuf>,
    #[command(flatten)]
    scenario: ScenarioArgs,
    /// Also write the comparison as JSON.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn load_gains(path: &Path) -> Result<GainSet> {
    GainSet::load(path).with_context(|| format!("reading gains {}", path.display()))
}

fn tune(args: TuneArgs) -> Result<()> {
    let mut cfg = match &args.config {
        Some(p) => CampaignConfig::load(p)?,
        None => CampaignConfig::default(),
    };
    if let Some(a) = args.algo {
        cfg.algorithm = a;
    }
    if let Some(n) = args.trials {
        cfg.trials = n;
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(n) = args.iters {
        cfg.set_iterations(n);
    }
    if let Some(n) = args.pop {
        cfg.set_population(n);
    }
    if let Some(o) = args.out {
        cfg.out = o;
    }
    let summary = run_campaign(&cfg)?;
    let best = &summary.trials[summary.best_trial];
    println!(
        "{} x{}: best aggregate {} (trial {}, seed {}); conventional PD {}",
        summary.algorithm,
        summary.trials.len(),
        best.cost.aggregate,
        best.trial,
        best.seed,
        summary.conventional_pd_cost.aggregate
    );
    println!("outputs in {}", cfg.out.display());
    Ok(())
}

fn simulate(args: SimulateArgs) -> Result<()> {
    let gains = load_gains(&args.gains)?;
    let (scenario, weights) = args.scenario.resolve()?;
    let report = simulate_to_dir(&gains, &scenario, &weights, &args.out)?;
    println!("aggregate cost {}", report.cost.aggregate);
    println!("outputs in {}", args.out.display());
    Ok(())
}

fn metrics(args: MetricsArgs) -> Result<()> {
    let (scenario, _) = args.scenario.resolve()?;
    let text = std::fs::read_to_string(&args.trajectory)
        .with_context(|| format!("reading {}", args.trajectory.display()))?;
    let traj = read_trajectory_csv(&text).with_context(|| args.trajectory.display().to_string())?;
    let reports = channel_reports(&traj, &scenario.reference)?;
    let json = serde_json::to_string_pretty(&reports)?;
    match args.out {
        Some(p) => std::fs::write(&p, json + "\n").with_context(|| format!("writing {}", p.display()))?,
        None => println!("{json}"),
    }
    Ok(())
}

fn compare_cmd(args: CompareArgs) -> Result<()> {
    let (scenario, weights) = args.scenario.resolve()?;
    let mut entries = Vec::new();
    for p in &args.gains {
        if !p.exists() {
            bail!("missing gains file {}", p.display());
        }
        let label = p.file_stem().map_or_else(|| p.display().to_string(), |s| s.to_string_lossy().into_owned());
        entries.push((label, load_gains(p)?));
    }
    let columns = compare(&entries, &scenario, &weights)?;
    print!("{}", render_comparison(&columns));
    if let Some(p) = args.out {
        std::fs::write(&p, serde_json::to_string_pretty(&columns)? + "\n")
            .with_context(|| format!("writing {}", p.display()))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Tune(a) => tune(a),
        Command::Simulate(a) => simulate(a),
        Command::Metrics(a) => metrics(a),
        Command::Compare(a) => compare_cmd(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
