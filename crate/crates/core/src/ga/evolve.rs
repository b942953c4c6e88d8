use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::operators::{crossover, mutate_insert, select, selection_weights};
use super::{Chromosome, FitnessContext, GaError, Scope};
use crate::model::{JobId, Schedule, Snapshot};
use crate::penalty::{Objective, PenaltyParams};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GaConfig {
    pub population_size: usize,
    pub generations: usize,
    /// Crossover pairs per generation, as a fraction of the population.
    pub crossover_rate: f64,
    /// Mutations per generation, as a fraction of the population.
    pub mutation_rate: f64,
    pub seed: u64,
    pub fitness: Objective,
    pub differentiated: bool,
}

impl Default for GaConfig {
    fn default() -> Self {
        Self {
            population_size: 10,
            generations: 1000,
            crossover_rate: 0.1,
            mutation_rate: 0.1,
            seed: 0,
            fitness: Objective::Waiting,
            differentiated: true,
        }
    }
}

impl GaConfig {
    pub fn validate(&self) -> Result<(), GaError> {
        if self.population_size < 2 {
            return Err(GaError::Config("population_size must be at least 2".into()));
        }
        for (name, rate) in [("crossover_rate", self.crossover_rate), ("mutation_rate", self.mutation_rate)] {
            if !(rate.is_finite() && rate > 0.0) {
                return Err(GaError::Config(format!("{name} must be positive")));
            }
        }
        Ok(())
    }

    pub fn crossover_pairs(&self) -> usize {
        ((self.crossover_rate * self.population_size as f64).ceil() as usize).max(1)
    }

    pub fn mutations(&self) -> usize {
        ((self.mutation_rate * self.population_size as f64).ceil() as usize).max(1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenerationStats {
    pub generation: usize,
    pub best: f64,
    pub mean: f64,
}

#[derive(Debug, Clone)]
pub struct Evolution {
    pub best: Chromosome,
    pub best_cost: f64,
    pub initial_cost: f64,
    /// Generation 0 is the initial population.
    pub trace: Vec<GenerationStats>,
}

impl Evolution {
    pub fn schedule(&self, base: &Schedule) -> Result<Schedule, GaError> {
        self.best.decode(base)
    }
}

/// Evolves the waiting jobs of `scope`. The incumbent order is always in the
/// initial population and the best individual is never replaced, so the
/// result is never worse than the snapshot's own schedule.
pub fn evolve(snapshot: &Snapshot<'_>, scope: Scope, config: &GaConfig, params: &PenaltyParams) -> Result<Evolution, GaError> {
    config.validate()?;
    let params = params.with_differentiation(config.differentiated);
    let template = Chromosome::encode(&snapshot.schedule, scope)?;
    let ctx = FitnessContext::new(snapshot, &template, config.fitness, &params)?;
    let blocks = template.blocks();
    let movable: Vec<_> = blocks.iter().filter(|b| b.len() > 1).cloned().collect();
    let n = config.population_size;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let mut pop: Vec<Vec<JobId>> = Vec::with_capacity(n);
    pop.push(template.genes.clone());
    for _ in 1..n {
        let mut g = template.genes.clone();
        for b in &movable {
            g[b.clone()].shuffle(&mut rng);
        }
        pop.push(g);
    }
    let mut costs: Vec<f64> = pop.iter().map(|g| ctx.cost(g)).collect();
    let initial_cost = costs[0];
    let mut elite = argmin(&costs);
    let mut best = (pop[elite].clone(), costs[elite]);
    let mut trace = Vec::with_capacity(config.generations + 1);
    trace.push(stats(0, best.1, &costs));

    if movable.is_empty() {
        for generation in 1..=config.generations {
            trace.push(stats(generation, best.1, &costs));
        }
        return Ok(Evolution { best: template.with_genes(best.0), best_cost: best.1, initial_cost, trace });
    }

    let len = template.len();
    for generation in 1..=config.generations {
        let weights = selection_weights(&costs);
        let mut offspring: Vec<Vec<JobId>> = Vec::new();
        for _ in 0..config.crossover_pairs() {
            let a = select(&weights, &mut rng);
            let b = select(&weights, &mut rng);
            let cut = if len > 1 { rng.random_range(1..len) } else { 0 };
            for child in [crossover(&pop[a], &pop[b], cut)?, crossover(&pop[b], &pop[a], cut)?] {
                let (from, to) = block_move(&movable, &mut rng);
                offspring.push(mutate_insert(&child, from, to)?);
            }
        }
        for _ in 0..config.mutations() {
            let p = select(&weights, &mut rng);
            let (from, to) = block_move(&movable, &mut rng);
            offspring.push(mutate_insert(&pop[p], from, to)?);
        }

        // steady state: each new child overwrites the current worst, never the elite
        for child in offspring {
            if pop.contains(&child) {
                continue;
            }
            let slot = (0..n)
                .filter(|&i| i != elite)
                .max_by(|&i, &j| costs[i].total_cmp(&costs[j]).then(j.cmp(&i)))
                .expect("population has at least two members");
            costs[slot] = ctx.cost(&child);
            pop[slot] = child;
        }
        elite = argmin(&costs);
        if costs[elite] < best.1 {
            best = (pop[elite].clone(), costs[elite]);
        }
        trace.push(stats(generation, best.1, &costs));
    }
    Ok(Evolution { best: template.with_genes(best.0), best_cost: best.1, initial_cost, trace })
}

fn block_move(movable: &[std::ops::Range<usize>], rng: &mut ChaCha8Rng) -> (usize, usize) {
    let block = &movable[rng.random_range(0..movable.len())];
    (rng.random_range(block.clone()), rng.random_range(block.clone()))
}

fn argmin(costs: &[f64]) -> usize {
    let mut best = 0;
    for (i, c) in costs.iter().enumerate() {
        if *c < costs[best] {
            best = i;
        }
    }
    best
}

fn stats(generation: usize, best: f64, costs: &[f64]) -> GenerationStats {
    let mean = costs.iter().sum::<f64>() / costs.len() as f64;
    GenerationStats { generation, best, mean }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::tests::job;
    use crate::model::JobStream;
    use crate::penalty;

    fn backlog(execs: &[u64], costs: &[f64], queues: usize) -> (JobStream, Schedule) {
        let jobs = execs.iter().zip(costs).enumerate().map(|(i, (&e, &c))| job(i as u32 + 1, 0, &[e], 50, c)).collect();
        let stream = JobStream::new(1, jobs).unwrap();
        let mut s = Schedule::idle(1, queues);
        for i in 0..execs.len() {
            s.tiers[0].queues[i % queues].push(JobId(i as u32 + 1));
        }
        (stream, s)
    }

    #[test]
    fn single_job_is_identity() {
        let (stream, s) = backlog(&[4], &[1.0], 2);
        let snap = Snapshot::backlog(&stream, s.clone(), 0).unwrap();
        let cfg = GaConfig { generations: 20, ..Default::default() };
        let evo = evolve(&snap, Scope::Tier(0), &cfg, &PenaltyParams::default()).unwrap();
        assert_eq!(evo.schedule(&s).unwrap(), s);
        assert_eq!(evo.trace.len(), 21);
        assert!(evo.trace.iter().all(|t| t.best == evo.trace[0].best));
    }

    #[test]
    fn finds_spt_on_one_queue() {
        let (stream, s) = backlog(&[5, 3, 4], &[1.0; 3], 1);
        let snap = Snapshot::backlog(&stream, s.clone(), 0).unwrap();
        let cfg = GaConfig { generations: 100, seed: 7, ..Default::default() };
        let evo = evolve(&snap, Scope::Tier(0), &cfg, &PenaltyParams::default()).unwrap();
        assert_eq!(evo.best.genes, vec![JobId(2), JobId(3), JobId(1)]);
        assert_eq!(evo.best_cost, 10.0);
        assert_eq!(evo.initial_cost, 13.0);
    }

    #[test]
    fn trace_is_monotone_and_reproducible() {
        let execs = [50, 400, 120, 330, 90, 210, 480, 60, 150, 270, 310, 75];
        let costs = [990.0, 1010.0, 1003.0, 997.0, 1020.0, 985.0, 1000.0, 1005.0, 995.0, 1012.0, 988.0, 1001.0];
        let (stream, s) = backlog(&execs, &costs, 3);
        let snap = Snapshot::backlog(&stream, s.clone(), 0).unwrap();
        let cfg = GaConfig { generations: 300, seed: 11, ..Default::default() };
        let a = evolve(&snap, Scope::Tier(0), &cfg, &PenaltyParams::default()).unwrap();
        let b = evolve(&snap, Scope::Tier(0), &cfg, &PenaltyParams::default()).unwrap();
        assert_eq!(a.trace, b.trace);
        assert_eq!(a.best, b.best);
        assert!(a.trace.windows(2).all(|w| w[1].best <= w[0].best));
        assert!(a.best_cost < a.initial_cost);
        let reference = penalty::objective_waiting(&a.schedule(&s).unwrap(), &snap, &PenaltyParams::default()).unwrap();
        assert!((reference - a.best_cost).abs() < 1e-6 * reference);
    }

    #[test]
    fn queue_scope_never_migrates() {
        let (stream, s) = backlog(&[9, 1, 8, 2, 7, 3], &[1.0; 6], 2);
        let snap = Snapshot::backlog(&stream, s.clone(), 0).unwrap();
        let cfg = GaConfig { generations: 50, seed: 3, ..Default::default() };
        let evo = evolve(&snap, Scope::Queue { tier: 0, queue: 1 }, &cfg, &PenaltyParams::default()).unwrap();
        let out = evo.schedule(&s).unwrap();
        assert_eq!(out.tiers[0].queues[0], s.tiers[0].queues[0]);
        let mut a = out.tiers[0].queues[1].clone();
        let mut b = s.tiers[0].queues[1].clone();
        a.sort();
        b.sort();
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_tiny_population() {
        let (stream, s) = backlog(&[1, 2], &[1.0; 2], 1);
        let snap = Snapshot::backlog(&stream, s, 0).unwrap();
        let cfg = GaConfig { population_size: 1, ..Default::default() };
        assert!(evolve(&snap, Scope::Tier(0), &cfg, &PenaltyParams::default()).is_err());
    }
}
