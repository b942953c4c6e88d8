//! Generators and invariant checks shared by the property tests and the
//! acceptance harness.
#![allow(dead_code)]

use std::collections::BTreeSet;

use proptest::prelude::*;
use proptest::test_runner::TestCaseError;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use tiersched::baselines::{BaselineKind, Dispatcher};
use tiersched::ga::{self, crossover, mutate_insert, Chromosome, GaConfig, Scope};
use tiersched::model::{Allowances, Job, JobId, JobStream, Schedule, Snapshot};
use tiersched::penalty::{self, Objective, PenaltyParams};
use tiersched::workload::{generate_stream, WorkloadConfig};

pub fn arb_job() -> impl Strategy<Value = Job> {
    (prop::collection::vec(1u64..10_000, 1..=4), 0u64..1_000_000, 0u64..100_000).prop_map(|(exec, arrival, slack)| {
        let total: u64 = exec.iter().sum();
        Job {
            id: JobId(1),
            arrival,
            exec_times: exec,
            target_completion: arrival + total + slack,
            service_cost: 1000.0,
            violation_cost: 1000.0,
        }
    })
}

/// The per-tier shares add up to the multi-tier allowance.
pub fn allowance_partition(job: &Job) -> Result<(), TestCaseError> {
    let a = Allowances::of(job).map_err(|e| TestCaseError::fail(e.to_string()))?;
    let sum: f64 = a.tier_allowances.iter().sum();
    let expected = a.multitier_allowance as f64;
    prop_assert!((sum - expected).abs() <= 1e-9 * expected.max(1.0), "shares {:?} sum to {sum}, allowance {expected}", a.tier_allowances);
    prop_assert!(a.tier_allowances.iter().all(|&s| s >= 0.0));
    Ok(())
}

pub fn arb_penalty_case() -> impl Strategy<Value = (f64, f64, f64, u64)> {
    // (ceiling, scale, cost coefficient, time)
    (0.01f64..100.0, 1e-9f64..1e-2, 1.0f64..5000.0, 0u64..10_000_000)
}

/// 0 <= penalty <= ceiling, penalty grows with time, and stays strictly below ceiling while
/// the exponent is small enough for the gap to be representable.
pub fn penalty_bounds((ceiling, scale, cost, t): (f64, f64, f64, u64)) -> Result<(), TestCaseError> {
    let params = PenaltyParams { ceiling, scale, ..Default::default() };
    let job = Job {
        id: JobId(1),
        arrival: 0,
        exec_times: vec![1],
        target_completion: 2,
        service_cost: cost,
        violation_cost: cost,
    };
    let penalty = penalty::waiting_penalty(&job, t, &params);
    let next = penalty::waiting_penalty(&job, t + 1, &params);
    prop_assert!((0.0..=ceiling).contains(&penalty), "penalty {penalty} outside [0, {ceiling}]");
    prop_assert!(next >= penalty);
    if scale * cost * (t as f64) < 36.0 {
        prop_assert!(penalty < ceiling, "penalty {penalty} reached ceiling {ceiling}");
    }
    prop_assert_eq!(penalty == 0.0, t == 0);
    let sla = penalty::sla_penalty(&job, t as i64, &params);
    prop_assert_eq!(sla, penalty);
    prop_assert_eq!(penalty::sla_penalty(&job, -(t as i64), &params), 0.0);
    Ok(())
}

/// A frozen backlog: `jobs` jobs spread over `tiers` tiers of `queues`
/// queues each, dispatched by the FCFS rule within each tier.
#[derive(Debug, Clone)]
pub struct Backlog {
    pub stream: JobStream,
    pub schedule: Schedule,
    pub seed: u64,
}

impl Backlog {
    pub fn snapshot(&self) -> Snapshot<'_> {
        Snapshot::backlog(&self.stream, self.schedule.clone(), 0).expect("valid backlog")
    }
}

pub fn backlog(seed: u64, jobs: usize, tiers: usize, queues: usize) -> Backlog {
    let config = WorkloadConfig { n_tiers: tiers, n_resources: queues, n_jobs: jobs, seed, ..Default::default() };
    let stream = generate_stream(&config).expect("valid config");
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xb10c);
    let mut schedule = Schedule::idle(tiers, queues);
    let mut dispatchers: Vec<Dispatcher> = (0..tiers).map(|_| Dispatcher::new(BaselineKind::Fcfs, queues).unwrap()).collect();
    for job in stream.jobs() {
        let tier = rng.random_range(0..tiers);
        let k = dispatchers[tier].assign(&schedule.tiers[tier]);
        schedule.tiers[tier].queues[k].push(job.id);
    }
    Backlog { stream, schedule, seed }
}

pub fn arb_backlog(max_jobs: usize) -> impl Strategy<Value = Backlog> {
    (any::<u64>(), 2..=max_jobs, 1usize..=2, 1usize..=3).prop_map(|(seed, jobs, tiers, queues)| backlog(seed, jobs, tiers, queues))
}

pub fn scopes(schedule: &Schedule) -> Vec<Scope> {
    let mut out = vec![Scope::System];
    for (j, t) in schedule.tiers.iter().enumerate() {
        out.push(Scope::Tier(j));
        out.extend((0..t.n_resources()).map(|k| Scope::Queue { tier: j, queue: k }));
    }
    out
}

/// Best-so-far never rises, the result never loses to the incumbent, and the
/// reported gain matches the reference objective on the decoded schedule
/// (the GA only counts jobs inside its chromosome, so totals differ by a
/// constant).
pub fn elitism(b: &Backlog, objective: Objective) -> Result<(), TestCaseError> {
    let snap = b.snapshot();
    let params = PenaltyParams::default();
    for scope in scopes(&b.schedule) {
        let config = GaConfig { generations: 25, seed: b.seed, fitness: objective, ..Default::default() };
        let evo = ga::evolve(&snap, scope, &config, &params).map_err(|e| TestCaseError::fail(e.to_string()))?;
        prop_assert_eq!(evo.trace.len(), 26);
        prop_assert!(evo.trace.windows(2).all(|w| w[1].best <= w[0].best), "{:?}", scope);
        prop_assert!(evo.best_cost <= evo.initial_cost);
        prop_assert_eq!(evo.trace.last().unwrap().best, evo.best_cost);
        let schedule = evo.schedule(&b.schedule).map_err(|e| TestCaseError::fail(e.to_string()))?;
        let after = penalty::evaluate(objective, &schedule, &snap, &params).unwrap();
        let before = penalty::evaluate(objective, &b.schedule, &snap, &params).unwrap();
        let gain = evo.initial_cost - evo.best_cost;
        prop_assert!(((before - after) - gain).abs() <= 1e-9 * before.abs().max(1.0), "{:?}: {} vs {}", scope, before - after, gain);
    }
    Ok(())
}

fn shuffled_within_blocks(c: &Chromosome, rng: &mut ChaCha8Rng) -> Vec<JobId> {
    let mut g = c.genes.clone();
    for b in c.blocks() {
        g[b].shuffle(rng);
    }
    g
}

fn same_blocks(template: &Chromosome, genes: &[JobId]) -> bool {
    template.blocks().into_iter().all(|b| {
        let a: BTreeSet<_> = template.genes[b.clone()].iter().collect();
        let c: BTreeSet<_> = genes[b].iter().collect();
        a == c
    })
}

/// Crossover and block-local insert mutation always yield permutations with
/// every job still in its own tier.
pub fn operator_closure(b: &Backlog, salt: u64) -> Result<(), TestCaseError> {
    let mut rng = ChaCha8Rng::seed_from_u64(b.seed ^ salt);
    let template = Chromosome::encode(&b.schedule, Scope::System).map_err(|e| TestCaseError::fail(e.to_string()))?;
    let len = template.len();
    for _ in 0..8 {
        let pa = shuffled_within_blocks(&template, &mut rng);
        let pb = shuffled_within_blocks(&template, &mut rng);
        let cut = rng.random_range(0..=len);
        let child = crossover(&pa, &pb, cut).map_err(|e| TestCaseError::fail(e.to_string()))?;
        prop_assert!(template.with_genes(child.clone()).validate().is_ok());
        prop_assert!(same_blocks(&template, &child), "crossover moved a job across tiers");
        prop_assert_eq!(&child[..cut], &pa[..cut]);
        let blocks = template.blocks();
        if let Some(block) = blocks.get(rng.random_range(0..blocks.len().max(1))) {
            let from = rng.random_range(block.clone());
            let to = rng.random_range(block.clone());
            let m = mutate_insert(&child, from, to).map_err(|e| TestCaseError::fail(e.to_string()))?;
            prop_assert!(template.with_genes(m.clone()).validate().is_ok());
            prop_assert!(same_blocks(&template, &m));
            let decoded = template.with_genes(m).decode(&b.schedule);
            prop_assert!(decoded.is_ok(), "{:?}", decoded.err());
        }
        // unrestricted moves stay permutations even if they cross tiers
        let from = rng.random_range(0..len);
        let to = rng.random_range(0..len);
        let m = mutate_insert(&pa, from, to).map_err(|e| TestCaseError::fail(e.to_string()))?;
        prop_assert!(template.with_genes(m).validate().is_ok());
    }
    Ok(())
}

fn scaled(stream: &JobStream, service: f64, violation: f64) -> JobStream {
    let jobs = stream
        .jobs()
        .iter()
        .map(|j| Job { service_cost: j.service_cost * service, violation_cost: j.violation_cost * violation, ..j.clone() })
        .collect();
    JobStream::new(stream.n_tiers(), jobs).unwrap()
}

/// Multiplying every cost coefficient by a positive constant leaves the set
/// of exhaustively optimal schedules unchanged.
pub fn scale_invariance(b: &Backlog, factor: f64) -> Result<(), TestCaseError> {
    let params = PenaltyParams::default();
    let other = scaled(&b.stream, factor, factor);
    let snap_a = b.snapshot();
    let snap_b = Snapshot::backlog(&other, b.schedule.clone(), 0).unwrap();
    for objective in [Objective::Waiting, Objective::MultitierAllowance, Objective::TierAllowance] {
        let a = ga::brute_force_best(&snap_a, Scope::System, objective, &params).map_err(|e| TestCaseError::fail(e.to_string()))?;
        let c = ga::brute_force_best(&snap_b, Scope::System, objective, &params).map_err(|e| TestCaseError::fail(e.to_string()))?;
        let set = |bf: &ga::BruteForce| bf.optima.iter().map(|o| o.genes.clone()).collect::<BTreeSet<_>>();
        prop_assert_eq!(set(&a), set(&c), "{:?} x{}", objective, factor);
        prop_assert!((c.cost - a.cost * factor).abs() <= 1e-9 * c.cost.abs().max(1.0));
    }
    Ok(())
}
