//! Tuning campaigns: config schema, trial loop, and on-disk outputs.
//!
//! Output layout under the campaign's `out` directory:
//!
//! ```text
//! config.json              resolved configuration
//! trial_<k>/trace.csv      iteration,best_cost,mean_cost
//! trial_<k>/trace.json     seed plus best gains per iteration
//! trial_<k>/best_gains.json
//! summary.json             per-trial bests, mean and std of the gains
//! best_trajectory.csv      closed-loop response of the overall best gains
//! ```
//!
//! Trial `k` uses seed `seed + k`.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::controller::GainSet;
use crate::error::{invalid, Error, Result};
use crate::objective::{evaluate, simulate_closed_loop, CostVector, ObjectiveWeights, ScenarioConfig};
use crate::optim::{optimize, Algorithm, AlgorithmConfig, BboConfig, OptimizationTrace, PsoConfig, SearchSpace};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CampaignConfig {
    pub scenario: ScenarioConfig,
    pub weights: ObjectiveWeights,
    /// `[min, max]` per gain, in `GainSet::NAMES` order.
    pub search_space: SearchSpace,
    pub algorithm: Algorithm,
    pub bbo: BboConfig,
    pub pso: PsoConfig,
    pub trials: usize,
    pub seed: u64,
    pub out: PathBuf,
}

impl Default for CampaignConfig {
    fn default() -> Self {
        Self {
            scenario: ScenarioConfig::default(),
            weights: ObjectiveWeights::default(),
            search_space: SearchSpace::pd_gains(),
            algorithm: Algorithm::Pso,
            bbo: BboConfig::default(),
            pso: PsoConfig::default(),
            trials: 5,
            seed: 0,
            out: PathBuf::from("runs/latest"),
        }
    }
}

impl CampaignConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trials < 1 {
            return Err(invalid("trials must be >= 1"));
        }
        if self.search_space.dim() != GainSet::DIM {
            return Err(invalid(format!(
                "search_space must have {} entries, got {}",
                GainSet::DIM,
                self.search_space.dim()
            )));
        }
        self.search_space
            .validate()
            .map_err(|e| invalid(format!("search_space: {}", strip(&e))))?;
        self.scenario.validate().map_err(|e| prefix("scenario", e))?;
        self.weights.validate().map_err(|e| prefix("weights", e))?;
        match self.algorithm_config() {
            AlgorithmConfig::Bbo(c) => c.validate(),
            AlgorithmConfig::Pso(c) => c.validate(),
        }
    }

    pub fn algorithm_config(&self) -> AlgorithmConfig {
        match self.algorithm {
            Algorithm::Bbo => AlgorithmConfig::Bbo(self.bbo.clone()),
            Algorithm::Pso => AlgorithmConfig::Pso(self.pso.clone()),
        }
    }

    pub fn set_iterations(&mut self, iterations: usize) {
        self.bbo.iterations = iterations;
        self.pso.iterations = iterations;
    }

    pub fn set_population(&mut self, population: usize) {
        self.bbo.population = population;
        self.pso.population = population;
    }

    /// Parses and validates; errors name the offending line where possible.
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate().map_err(|e| match e {
            Error::InvalidConfig(msg) => match locate(text, &msg) {
                Some(line) => invalid(format!("line {line}: {msg}")),
                None => invalid(msg),
            },
            other => other,
        })?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text).map_err(|e| invalid(format!("{}: {}", path.display(), strip(&e))))
    }
}

fn strip(e: &Error) -> String {
    match e {
        Error::InvalidConfig(m) => m.clone(),
        other => other.to_string(),
    }
}

fn prefix(section: &str, e: Error) -> Error {
    match e {
        Error::InvalidConfig(m) if m.starts_with(section) => Error::InvalidConfig(m),
        Error::InvalidConfig(m) => invalid(format!("{section}.{m}")),
        other => other,
    }
}

/// Finds the 1-based line of the dotted key path that opens `msg`.
fn locate(text: &str, msg: &str) -> Option<usize> {
    let path = msg.split_whitespace().next()?.trim_end_matches(':');
    let mut offset = 0;
    let mut found = None;
    for key in path.split('.') {
        let needle = format!("\"{key}\"");
        // only keys: the quoted name must be followed by a colon
        let pos = text[offset..].match_indices(&needle).map(|(i, _)| i + offset).find(|&i| {
            text[i + needle.len()..].trim_start().starts_with(':')
        })?;
        offset = pos + needle.len();
        found = Some(pos);
    }
    found.map(|pos| text[..pos].lines().count().max(1))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub trial: usize,
    pub seed: u64,
    pub best_gains: GainSet,
    pub cost: CostVector,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignSummary {
    pub algorithm: Algorithm,
    pub base_seed: u64,
    pub iterations: usize,
    pub population: usize,
    pub trials: Vec<TrialResult>,
    /// Index into `trials` of the lowest aggregate cost.
    pub best_trial: usize,
    pub mean_gains: GainSet,
    /// Sample standard deviation across trials (0 for a single trial).
    pub std_gains: GainSet,
    pub conventional_pd_cost: CostVector,
}

#[derive(Serialize)]
struct TraceSidecar {
    algorithm: Algorithm,
    seed: u64,
    iterations: Vec<TraceRow>,
}

#[derive(Serialize)]
struct TraceRow {
    iteration: usize,
    best_cost: f64,
    mean_cost: f64,
    best_gains: GainSet,
}

/// Result of one trial before anything is written.
pub struct TrialRun {
    pub result: TrialResult,
    pub trace: OptimizationTrace,
}

pub fn run_trial(cfg: &CampaignConfig, trial: usize) -> Result<TrialRun> {
    let seed = cfg.seed.wrapping_add(trial as u64);
    let scenario = &cfg.scenario;
    let weights = &cfg.weights;
    let objective = |x: &[f64]| evaluate(&GainSet::from_array(x.try_into().expect("8 gains")), scenario, weights).aggregate;
    let run = optimize(&cfg.algorithm_config(), &cfg.search_space, objective, seed)?;
    let best_gains = GainSet::from_slice(&run.best_position)?;
    let cost = evaluate(&best_gains, scenario, weights);
    Ok(TrialRun {
        result: TrialResult {
            trial,
            seed,
            best_gains,
            cost,
        },
        trace: run.trace,
    })
}

pub(crate) fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

pub(crate) fn json_bytes<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut v = serde_json::to_vec_pretty(value)?;
    v.push(b'\n');
    Ok(v)
}

fn write_trial(dir: &Path, algorithm: Algorithm, run: &TrialRun) -> Result<()> {
    let mut csv = Vec::new();
    run.trace.write_csv(&mut csv)?;
    write_atomic(&dir.join("trace.csv"), &csv)?;

    let sidecar = TraceSidecar {
        algorithm,
        seed: run.trace.seed,
        iterations: run
            .trace
            .entries
            .iter()
            .map(|e| {
                Ok(TraceRow {
                    iteration: e.iteration,
                    best_cost: e.best_cost,
                    mean_cost: e.mean_cost,
                    best_gains: GainSet::from_slice(&e.best_position)?,
                })
            })
            .collect::<Result<_>>()?,
    };
    write_atomic(&dir.join("trace.json"), &json_bytes(&sidecar)?)?;
    write_atomic(&dir.join("best_gains.json"), &json_bytes(&run.result.best_gains)?)
}

fn gain_statistics(trials: &[TrialResult]) -> (GainSet, GainSet) {
    let n = trials.len() as f64;
    let mut mean = [0.0; 8];
    for t in trials {
        for (m, g) in mean.iter_mut().zip(t.best_gains.to_array()) {
            *m += g / n;
        }
    }
    let mut std = [0.0; 8];
    if trials.len() > 1 {
        for t in trials {
            for ((s, g), m) in std.iter_mut().zip(t.best_gains.to_array()).zip(mean) {
                *s += (g - m).powi(2) / (n - 1.0);
            }
        }
        std = std.map(f64::sqrt);
    }
    (GainSet::from_array(mean), GainSet::from_array(std))
}

/// Runs every trial and writes the full output tree.
pub fn run_campaign(cfg: &CampaignConfig) -> Result<CampaignSummary> {
    cfg.validate()?;
    let out = &cfg.out;
    std::fs::create_dir_all(out)?;
    write_atomic(&out.join("config.json"), &json_bytes(cfg)?)?;

    let mut trials = Vec::with_capacity(cfg.trials);
    for k in 0..cfg.trials {
        let run = run_trial(cfg, k)?;
        write_trial(&out.join(format!("trial_{k}")), cfg.algorithm, &run)?;
        log::info!(
            "trial {k} (seed {}): best cost {} in {:.2?}",
            run.result.seed,
            run.result.cost.aggregate,
            run.trace.wall_time
        );
        trials.push(run.result);
    }

    let best_trial = trials
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.cost.aggregate.total_cmp(&b.1.cost.aggregate))
        .map(|(i, _)| i)
        .unwrap_or(0);
    let (mean_gains, std_gains) = gain_statistics(&trials);
    let (iterations, population) = match cfg.algorithm_config() {
        AlgorithmConfig::Bbo(c) => (c.iterations, c.population),
        AlgorithmConfig::Pso(c) => (c.iterations, c.population),
    };
    let summary = CampaignSummary {
        algorithm: cfg.algorithm,
        base_seed: cfg.seed,
        iterations,
        population,
        best_trial,
        mean_gains,
        std_gains,
        conventional_pd_cost: evaluate(&GainSet::CONVENTIONAL_PD, &cfg.scenario, &cfg.weights),
        trials,
    };
    write_atomic(&out.join("summary.json"), &json_bytes(&summary)?)?;

    let best = &summary.trials[best_trial].best_gains;
    let mut csv = Vec::new();
    match simulate_closed_loop(best, &cfg.scenario) {
        Ok(traj) => traj.write_csv(&mut csv)?,
        Err(e) => log::warn!("best gains diverge: {e}"),
    }
    write_atomic(&out.join("best_trajectory.csv"), &csv)?;
    Ok(summary)
}
