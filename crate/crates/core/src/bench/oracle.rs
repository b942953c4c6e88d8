//! Checks against independent references: the exhaustive search for small
//! backlogs and the replay oracle for simulated runs.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::run::fcfs_backlog;
use super::BenchError;
use crate::ga::{self, GaConfig, Scope, BRUTE_FORCE_LIMIT};
use crate::model::{JobStream, Snapshot};
use crate::penalty::{self, Objective, PenaltyParams};
use crate::simulator::{self, compare_traces, oracle_recompute, Mismatch, SimConfig, Topology};
use crate::splitmix;
use crate::strategy::{scheduler_for, StrategySpec};
use crate::workload::{generate_stream, WorkloadConfig};

/// Smallest backlog drawn for the exhaustive comparison.
pub const MIN_ORACLE_JOBS: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleCase {
    pub instance: usize,
    pub seed: u64,
    pub jobs: usize,
    pub optimum: f64,
    pub found: f64,
    pub optimal: bool,
    /// `found / optimum - 1`, 0 when the optimum is 0 and was found.
    pub gap: f64,
}

/// GA against exhaustive search on `instances` one-tier, two-queue batch
/// backlogs of `MIN_ORACLE_JOBS..=max_jobs` jobs, waiting objective.
/// `ga.seed` is replaced per instance.
pub fn brute_force_check(
    seed: u64,
    instances: usize,
    max_jobs: usize,
    ga: &GaConfig,
    params: &PenaltyParams,
) -> Result<Vec<OracleCase>, BenchError> {
    if !(MIN_ORACLE_JOBS..=BRUTE_FORCE_LIMIT).contains(&max_jobs) {
        return Err(BenchError::Scenario(format!("max_jobs must lie in {MIN_ORACLE_JOBS}..={BRUTE_FORCE_LIMIT}")));
    }
    let ga = GaConfig { fitness: Objective::Waiting, ..*ga };
    let one = |i: usize| -> Result<OracleCase, BenchError> {
        let s = splitmix(seed, i as u64);
        let mut rng = ChaCha8Rng::seed_from_u64(s);
        let jobs = rng.random_range(MIN_ORACLE_JOBS..=max_jobs);
        let topology = Topology { tiers: 1, resources: 2 };
        let config = WorkloadConfig { n_tiers: 1, n_resources: 2, n_jobs: jobs, seed: s, ..Default::default() };
        let stream = generate_stream(&config)?;
        let snapshot = Snapshot::backlog(&stream, fcfs_backlog(stream.jobs().iter().map(|j| j.id), topology), 0)?;
        let params = params.with_differentiation(ga.differentiated);
        let bf = ga::brute_force_best(&snapshot, Scope::Tier(0), Objective::Waiting, &params)?;
        let evo = ga::evolve(&snapshot, Scope::Tier(0), &GaConfig { seed: splitmix(s, 1), ..ga }, &params)?;
        let found = penalty::objective_waiting(&evo.schedule(&snapshot.schedule)?, &snapshot, &params)?;
        let optimal = bf.is_optimal(found);
        let gap = if bf.cost > 0.0 { found / bf.cost - 1.0 } else if optimal { 0.0 } else { f64::INFINITY };
        Ok(OracleCase { instance: i, seed: s, jobs, optimum: bf.cost, found, optimal, gap })
    };
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..instances).into_par_iter().map(one).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..instances).map(one).collect()
    }
}

/// Runs `stream` under `strategy` and replays the recorded decisions through
/// the oracle. `None` when every field of every visit agrees.
pub fn replay_check(
    stream: &JobStream,
    topology: Topology,
    strategy: StrategySpec,
    ga: &GaConfig,
    params: &PenaltyParams,
    sim: SimConfig,
) -> Result<Option<Mismatch>, BenchError> {
    let mut scheduler = scheduler_for(strategy, topology, *ga, *params)?;
    let report = simulator::run(stream, topology, scheduler.as_mut(), sim)?;
    let replayed = oracle_recompute(stream, topology, &report.history)?;
    Ok(compare_traces(&replayed, &report.trace))
}
