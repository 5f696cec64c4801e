//! Population optimizers over a box-bounded real vector.
//!
//! Both algorithms minimize. Randomness comes from a single ChaCha8 stream
//! per run, seeded from a `u64`. Draw order:
//!
//! 1. initialization: for each candidate in index order, one uniform per
//!    dimension;
//! 2. every iteration: the algorithm-specific per-candidate, per-dimension
//!    draws documented in [`bbo`] and [`pso`].
//!
//! Objective evaluations for a generation run in parallel after all draws
//! for that generation are taken, so thread scheduling never touches the
//! stream.

pub mod bbo;
pub mod pso;

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

pub use bbo::{bbo_rates, bbo_step, BboConfig};
pub use pso::{pso_step, velocity_update, Particle, PsoConfig, SwarmBest};

pub type OptimRng = ChaCha8Rng;

pub fn seeded_rng(seed: u64) -> OptimRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Inclusive per-dimension bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SearchSpace {
    pub bounds: Vec<[f64; 2]>,
}

impl SearchSpace {
    pub fn new(bounds: Vec<[f64; 2]>) -> Result<Self> {
        let space = Self { bounds };
        space.validate()?;
        Ok(space)
    }

    /// Min/max bounds for the eight PD gains.
    pub fn pd_gains() -> Self {
        Self {
            bounds: vec![
                [0.0, 20.0],
                [0.0, 10.0],
                [0.0, 10.0],
                [0.0, 10.0],
                [0.0, 10.0],
                [0.0, 10.0],
                [0.0, 3.0],
                [0.0, 3.0],
            ],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.bounds.is_empty() {
            return Err(invalid("search space needs at least one dimension"));
        }
        for (i, [lo, hi]) in self.bounds.iter().enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(invalid(format!("search space dimension {i}: need min < max, got [{lo}, {hi}]")));
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.bounds.len()
    }

    pub fn width(&self, d: usize) -> f64 {
        self.bounds[d][1] - self.bounds[d][0]
    }

    pub fn center(&self) -> Vec<f64> {
        self.bounds.iter().map(|[lo, hi]| 0.5 * (lo + hi)).collect()
    }

    pub fn clamp(&self, d: usize, v: f64) -> f64 {
        v.clamp(self.bounds[d][0], self.bounds[d][1])
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim() && x.iter().zip(&self.bounds).all(|(v, [lo, hi])| lo <= v && v <= hi)
    }

    pub(crate) fn sample<R: Rng>(&self, rng: &mut R) -> Vec<f64> {
        self.bounds
            .iter()
            .map(|[lo, hi]| lo + rng.random::<f64>() * (hi - lo))
            .collect()
    }
}

/// A position with its last evaluated cost.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub position: Vec<f64>,
    pub cost: f64,
}

/// One row of the convergence record. Iteration 0 is the initial population.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub iteration: usize,
    /// Best cost found so far.
    pub best_cost: f64,
    /// Mean cost of the current population.
    pub mean_cost: f64,
    pub best_position: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizationTrace {
    pub seed: u64,
    pub entries: Vec<TraceEntry>,
    /// Not written to any output file; outputs stay byte-reproducible.
    pub wall_time: Duration,
}

impl OptimizationTrace {
    pub fn write_csv<W: std::io::Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "iteration,best_cost,mean_cost")?;
        for e in &self.entries {
            writeln!(out, "{},{},{}", e.iteration, e.best_cost, e.mean_cost)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Bbo,
    Pso,
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Algorithm::Bbo => "bbo",
            Algorithm::Pso => "pso",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum AlgorithmConfig {
    Bbo(BboConfig),
    Pso(PsoConfig),
}

impl AlgorithmConfig {
    pub fn algorithm(&self) -> Algorithm {
        match self {
            AlgorithmConfig::Bbo(_) => Algorithm::Bbo,
            AlgorithmConfig::Pso(_) => Algorithm::Pso,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizationResult {
    pub best_position: Vec<f64>,
    pub best_cost: f64,
    pub trace: OptimizationTrace,
}

/// Evaluates every position; non-finite costs become `+inf`.
pub(crate) fn evaluate_all<F>(objective: &F, positions: &[Vec<f64>]) -> Vec<f64>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    positions
        .par_iter()
        .map(|x| {
            let c = objective(x);
            if c.is_nan() {
                f64::INFINITY
            } else {
                c
            }
        })
        .collect()
}

pub(crate) fn mean(costs: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = costs.fold((0.0, 0usize), |(s, n), c| (s + c, n + 1));
    sum / n as f64
}

/// Runs the configured algorithm for its full iteration budget.
pub fn optimize<F>(config: &AlgorithmConfig, space: &SearchSpace, objective: F, seed: u64) -> Result<OptimizationResult>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    space.validate()?;
    let start = Instant::now();
    let mut rng = seeded_rng(seed);
    let (best_position, best_cost, entries) = match config {
        AlgorithmConfig::Bbo(cfg) => bbo::run(cfg, space, &objective, &mut rng)?,
        AlgorithmConfig::Pso(cfg) => pso::run(cfg, space, &objective, &mut rng)?,
    };
    Ok(OptimizationResult {
        best_position,
        best_cost,
        trace: OptimizationTrace {
            seed,
            entries,
            wall_time: start.elapsed(),
        },
    })
}
