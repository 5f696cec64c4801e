//! Biogeography-based optimization with partial immigration.
//!
//! Candidates ("islands") are ranked by cost, rank 1 best. Rank `f` among
//! `n` emigrates with rate `E = (n + 1 - f) / (n + 1)` and immigrates with
//! `I = 1 - E` (scaled by `max_immigration`). Every candidate may import
//! each feature from an emigrant picked by roulette on `E`; the imported
//! feature moves `migration_blend` of the way toward the emigrant's value
//! (1 copies it). Gaussian mutation follows. After re-evaluation the
//! `elites` best of the previous generation replace the worst offspring,
//! unless an identical position already survived.
//!
//! Per-iteration draw order, for each candidate in rank order:
//! for each dimension one uniform for the immigration test and, when it
//! passes, one uniform for the roulette; then for each dimension one
//! uniform for the mutation test and, when it passes, one standard normal.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{evaluate_all, mean, Candidate, OptimRng, SearchSpace, TraceEntry};
use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BboConfig {
    pub population: usize,
    pub iterations: usize,
    pub elites: usize,
    /// Per-feature mutation probability.
    pub mutation_probability: f64,
    /// Gaussian mutation standard deviation as a fraction of the dimension width.
    pub mutation_scale: f64,
    /// Upper bound of the immigration rate; 1 gives `I = 1 - E`.
    pub max_immigration: f64,
    /// Weight of the emigrant's feature on immigration; 1 copies it outright.
    pub migration_blend: f64,
}

impl Default for BboConfig {
    fn default() -> Self {
        Self {
            population: 50,
            iterations: 30,
            elites: 2,
            mutation_probability: 0.05,
            mutation_scale: 0.02,
            max_immigration: 1.0,
            migration_blend: 0.8,
        }
    }
}

impl BboConfig {
    pub fn validate(&self) -> Result<()> {
        if self.population < 2 {
            return Err(invalid("bbo.population must be >= 2"));
        }
        if self.elites >= self.population {
            return Err(invalid("bbo.elites must be < population"));
        }
        if !(0.0..=1.0).contains(&self.mutation_probability) {
            return Err(invalid("bbo.mutation_probability must lie in [0, 1]"));
        }
        if !(self.mutation_scale >= 0.0 && self.mutation_scale.is_finite()) {
            return Err(invalid("bbo.mutation_scale must be >= 0"));
        }
        if !(0.0..=1.0).contains(&self.max_immigration) {
            return Err(invalid("bbo.max_immigration must lie in [0, 1]"));
        }
        Ok(())
    }
}

/// Emigration and immigration rates `(E, I)` of the candidate at `rank`
/// (1 = best) in a population of `population`.
pub fn bbo_rates(rank: usize, population: usize) -> Result<(f64, f64)> {
    if rank < 1 || rank > population {
        return Err(Error::RankOutOfRange { rank, population });
    }
    let n = population as f64;
    let emigration = (n + 1.0 - rank as f64) / (n + 1.0);
    Ok((emigration, 1.0 - emigration))
}

fn sort_by_cost(pop: &mut [Candidate]) {
    // stable: earlier index wins ties
    pop.sort_by(|a, b| a.cost.total_cmp(&b.cost));
}

fn roulette(weights: &[f64], total: f64, u: f64) -> usize {
    let target = u * total;
    let mut acc = 0.0;
    for (i, w) in weights.iter().enumerate() {
        acc += w;
        if target < acc {
            return i;
        }
    }
    weights.len() - 1
}

/// Advances a cost-sorted population by one generation and returns it sorted.
pub fn bbo_step<F>(
    population: &[Candidate],
    space: &SearchSpace,
    cfg: &BboConfig,
    rng: &mut OptimRng,
    objective: &F,
) -> Result<Vec<Candidate>>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let n = population.len();
    let rates = (1..=n).map(|rank| bbo_rates(rank, n)).collect::<Result<Vec<_>>>()?;
    let emigration: Vec<f64> = rates.iter().map(|r| r.0).collect();
    let total_emigration: f64 = emigration.iter().sum();
    let elites = cfg.elites.min(n);

    let mut offspring: Vec<Vec<f64>> = Vec::with_capacity(n);
    for (rank0, island) in population.iter().enumerate() {
        let immigration = cfg.max_immigration * rates[rank0].1;
        let mut x = island.position.clone();
        for (d, feature) in x.iter_mut().enumerate() {
            if rng.random::<f64>() < immigration {
                let src = roulette(&emigration, total_emigration, rng.random::<f64>());
                *feature += cfg.migration_blend * (population[src].position[d] - *feature);
            }
        }
        for (d, feature) in x.iter_mut().enumerate() {
            if rng.random::<f64>() < cfg.mutation_probability {
                let step: f64 = rng.sample(StandardNormal);
                *feature += step * cfg.mutation_scale * space.width(d);
            }
            *feature = space.clamp(d, *feature);
        }
        offspring.push(x);
    }

    let costs = evaluate_all(objective, &offspring);
    let mut next: Vec<Candidate> = offspring
        .into_iter()
        .zip(costs)
        .map(|(position, cost)| Candidate { position, cost })
        .collect();
    sort_by_cost(&mut next);
    // previous elites missing from the new generation take the places of the worst offspring
    let mut slot = n;
    for elite in &population[..elites] {
        if !next.iter().any(|c| c.position == elite.position) {
            slot -= 1;
            next[slot] = elite.clone();
        }
    }
    sort_by_cost(&mut next);
    Ok(next)
}

pub(crate) fn run<F>(
    cfg: &BboConfig,
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
    let mut pop: Vec<Candidate> = positions
        .into_iter()
        .zip(costs)
        .map(|(position, cost)| Candidate { position, cost })
        .collect();
    sort_by_cost(&mut pop);

    let entry = |iteration: usize, pop: &[Candidate]| TraceEntry {
        iteration,
        best_cost: pop[0].cost,
        mean_cost: mean(pop.iter().map(|c| c.cost)),
        best_position: pop[0].position.clone(),
    };
    let mut trace = vec![entry(0, &pop)];
    for it in 1..=cfg.iterations {
        pop = bbo_step(&pop, space, cfg, rng, objective)?;
        trace.push(entry(it, &pop));
    }
    let best = pop.swap_remove(0);
    Ok((best.position, best.cost, trace))
}
