//! Global-best particle swarm with geometrically damped inertia.
//!
//! At iteration `k` (0-based) the inertia weight is `w * w_d^k`. Velocities
//! start at zero and are clamped per dimension to `±velocity_clamp * width`;
//! positions are clamped to the box. Personal and global bests change only
//! on strict improvement, and the global best is refreshed once per
//! iteration after the whole swarm has moved.
//!
//! Per-iteration draw order: for each particle in index order, for each
//! dimension, `r1` then `r2`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{evaluate_all, mean, OptimRng, SearchSpace, TraceEntry};
use crate::error::{invalid, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PsoConfig {
    pub population: usize,
    pub iterations: usize,
    pub inertia: f64,
    pub inertia_damping: f64,
    /// Personal learning coefficient.
    pub cognitive: f64,
    /// Global learning coefficient.
    pub social: f64,
    /// Velocity limit as a fraction of the dimension width.
    pub velocity_clamp: f64,
}

impl Default for PsoConfig {
    fn default() -> Self {
        Self {
            population: 50,
            iterations: 30,
            inertia: 0.5,
            inertia_damping: 0.99,
            cognitive: 2.0,
            social: 2.0,
            velocity_clamp: 0.2,
        }
    }
}

impl PsoConfig {
    pub fn validate(&self) -> Result<()> {
        if self.population < 2 {
            return Err(invalid("pso.population must be >= 2"));
        }
        if !(self.inertia > 0.0 && self.inertia <= 1.0) {
            return Err(invalid("pso.inertia must lie in (0, 1]"));
        }
        if !(self.inertia_damping > 0.0 && self.inertia_damping <= 1.0) {
            return Err(invalid("pso.inertia_damping must lie in (0, 1]"));
        }
        if !(self.cognitive >= 0.0 && self.social >= 0.0) {
            return Err(invalid("pso learning coefficients must be >= 0"));
        }
        if !(self.velocity_clamp > 0.0) {
            return Err(invalid("pso.velocity_clamp must be > 0"));
        }
        Ok(())
    }

    /// Inertia weight in effect at 0-based iteration `k`.
    pub fn inertia_at(&self, k: usize) -> f64 {
        self.inertia * self.inertia_damping.powi(k as i32)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Particle {
    pub position: Vec<f64>,
    pub velocity: Vec<f64>,
    pub cost: f64,
    pub best_position: Vec<f64>,
    pub best_cost: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SwarmBest {
    pub position: Vec<f64>,
    pub cost: f64,
}

/// Canonical velocity update for one coordinate.
#[allow(clippy::too_many_arguments)]
pub fn velocity_update(
    x: f64,
    v: f64,
    personal: f64,
    global: f64,
    inertia: f64,
    cognitive: f64,
    social: f64,
    r1: f64,
    r2: f64,
) -> f64 {
    inertia * v + cognitive * r1 * (personal - x) + social * r2 * (global - x)
}

/// Moves every particle once, re-evaluates, and refreshes the bests.
pub fn pso_step<F>(
    swarm: &mut [Particle],
    best: &mut SwarmBest,
    space: &SearchSpace,
    cfg: &PsoConfig,
    iteration: usize,
    rng: &mut OptimRng,
    objective: &F,
) where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let inertia = cfg.inertia_at(iteration);
    for p in swarm.iter_mut() {
        for d in 0..space.dim() {
            let (r1, r2) = (rng.random::<f64>(), rng.random::<f64>());
            let vmax = cfg.velocity_clamp * space.width(d);
            let v = velocity_update(
                p.position[d],
                p.velocity[d],
                p.best_position[d],
                best.position[d],
                inertia,
                cfg.cognitive,
                cfg.social,
                r1,
                r2,
            )
            .clamp(-vmax, vmax);
            p.velocity[d] = v;
            p.position[d] = space.clamp(d, p.position[d] + v);
        }
    }

    let positions: Vec<Vec<f64>> = swarm.iter().map(|p| p.position.clone()).collect();
    let costs = evaluate_all(objective, &positions);
    for (p, cost) in swarm.iter_mut().zip(costs) {
        p.cost = cost;
        if cost < p.best_cost {
            p.best_cost = cost;
            p.best_position.clone_from(&p.position);
        }
    }
    update_best(swarm, best);
}

fn update_best(swarm: &[Particle], best: &mut SwarmBest) {
    for p in swarm {
        if p.best_cost < best.cost {
            best.cost = p.best_cost;
            best.position.clone_from(&p.best_position);
        }
    }
}

pub(crate) fn run<F>(
    cfg: &PsoConfig,
    space: &SearchSpace,
    objective: &F,
    rng: &mut OptimRng,
) -> Result<(Vec<f64>, f64, Vec<TraceEntry>)>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    cfg.validate()?;
    let positions: Vec<Vec<f64>> = (0..cfg.population).map(|_| space.sample(rng)).collect();
    let costs = evaluate_all(objective, &positions);
    let mut swarm: Vec<Particle> = positions
        .into_iter()
        .zip(costs)
        .map(|(position, cost)| Particle {
            velocity: vec![0.0; space.dim()],
            best_position: position.clone(),
            best_cost: cost,
            position,
            cost,
        })
        .collect();
    let mut best = SwarmBest {
        position: swarm[0].position.clone(),
        cost: swarm[0].cost,
    };
    update_best(&swarm, &mut best);

    let entry = |iteration: usize, swarm: &[Particle], best: &SwarmBest| TraceEntry {
        iteration,
        best_cost: best.cost,
        mean_cost: mean(swarm.iter().map(|p| p.cost)),
        best_position: best.position.clone(),
    };
    let mut trace = vec![entry(0, &swarm, &best)];
    for k in 0..cfg.iterations {
        pso_step(&mut swarm, &mut best, space, cfg, k, rng, objective);
        trace.push(entry(k + 1, &swarm, &best));
    }
    Ok((best.position, best.cost, trace))
}
