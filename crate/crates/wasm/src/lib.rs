//! Browser bindings: penalty curves, evolving a single-tier backlog, and a
//! small strategy comparison. Every export returns JSON text; the plain
//! `*_json` functions hold the logic so they can be tested natively.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use tiersched::bench::{self, RankTable, Scenario};
use tiersched::ga::{evolve, GaConfig, GenerationStats, Scope};
use tiersched::model::{JobId, Schedule, Snapshot};
use tiersched::penalty::{Objective, PenaltyParams};
use tiersched::simulator::Topology;
use tiersched::workload::{generate_stream, WorkloadConfig};

#[derive(Serialize)]
struct Curve {
    x: Vec<f64>,
    penalty: Vec<f64>,
    linear: Vec<f64>,
}

/// Samples the per-job penalty `ceiling * (1 - e^(-scale * cost * x))` on
/// `[0, max_x]`, alongside the linear weighted cost `cost * x`.
pub fn penalty_curve_json(ceiling: f64, scale: f64, cost: f64, max_x: f64, points: usize) -> Result<String, String> {
    let params = PenaltyParams { ceiling, scale, ..Default::default() };
    params.validate().map_err(|e| e.to_string())?;
    if !(max_x.is_finite() && max_x > 0.0 && cost.is_finite() && cost > 0.0) {
        return Err("cost and max_x must be positive".into());
    }
    let points = points.clamp(2, 10_000);
    let x: Vec<f64> = (0..points).map(|i| max_x * i as f64 / (points - 1) as f64).collect();
    let penalty = x.iter().map(|&t| params.curve(cost * t)).collect();
    let linear = x.iter().map(|&t| cost * t).collect();
    to_json(&Curve { x, penalty, linear })
}

#[derive(Serialize)]
struct JobView {
    id: u32,
    exec: u64,
    cost: f64,
}

#[derive(Serialize)]
struct Evolved {
    initial_cost: f64,
    best_cost: f64,
    improvement_pct: f64,
    jobs: Vec<JobView>,
    initial: Vec<Vec<u32>>,
    best: Vec<Vec<u32>>,
    trace: Vec<GenerationStats>,
}

fn queues(schedule: &Schedule) -> Vec<Vec<u32>> {
    schedule.tiers[0].queues.iter().map(|q| q.iter().map(|id| id.0).collect()).collect()
}

/// Generates a batch backlog on one tier, dispatches it first come first
/// served, then lets the GA reorder and migrate jobs between the queues.
/// `objective` is `waiting`, `sla-al` or `sla-pt`.
pub fn evolve_backlog_json(seed: u64, jobs: usize, queues_n: usize, generations: usize, objective: &str) -> Result<String, String> {
    if !(1..=200).contains(&jobs) || !(1..=16).contains(&queues_n) || generations > 20_000 {
        return Err("jobs must be 1..=200, queues 1..=16, generations at most 20000".into());
    }
    let fitness: Objective = serde_json::from_value(serde_json::Value::String(objective.into()))
        .map_err(|_| format!("unknown objective {objective:?}"))?;
    let config = WorkloadConfig { n_resources: queues_n, n_jobs: jobs, seed, ..Default::default() };
    let stream = generate_stream(&config).map_err(|e| e.to_string())?;
    let topology = Topology { tiers: 1, resources: queues_n };
    let initial = bench::fcfs_backlog((1..=jobs as u32).map(JobId), topology);
    let snapshot = Snapshot::backlog(&stream, initial.clone(), 0).map_err(|e| e.to_string())?;
    let ga = GaConfig { generations, seed, fitness, ..Default::default() };
    let params = PenaltyParams::default();
    let evo = evolve(&snapshot, Scope::Tier(0), &ga, &params).map_err(|e| e.to_string())?;
    let best = evo.schedule(&initial).map_err(|e| e.to_string())?;
    let job_views = stream
        .jobs()
        .iter()
        .map(|j| JobView { id: j.id.0, exec: j.exec_times[0], cost: j.service_cost })
        .collect();
    to_json(&Evolved {
        initial_cost: evo.initial_cost,
        best_cost: evo.best_cost,
        improvement_pct: bench::improvement_pct(evo.initial_cost, evo.best_cost),
        jobs: job_views,
        initial: queues(&initial),
        best: queues(&best),
        trace: evo.trace,
    })
}

#[derive(Serialize)]
struct Ranked {
    strategy: String,
    rank: usize,
    mean: f64,
    /// Sign-test p-value against the next strategy down, if any.
    p_next: Option<f64>,
}

fn ranked(table: &RankTable) -> Vec<Ranked> {
    let s = &table.strategies;
    s.iter()
        .enumerate()
        .map(|(i, st)| Ranked {
            strategy: st.strategy.clone(),
            rank: st.rank,
            mean: st.mean,
            p_next: s.get(i + 1).and_then(|next| table.test(&st.strategy, &next.strategy)).map(|t| t.p_value),
        })
        .collect()
}

/// Runs `replications` seeded streams through WRR, WLC and the GA variants
/// and ranks them on total weighted waiting cost.
pub fn compare_strategies_json(seed: u64, replications: usize, jobs: usize, rate: f64, generations: usize) -> Result<String, String> {
    if !(bench::MIN_REPLICATIONS..=60).contains(&replications) || !(5..=200).contains(&jobs) || generations > 2000 {
        return Err(format!(
            "replications must be {}..=60, jobs 5..=200, generations at most 2000",
            bench::MIN_REPLICATIONS
        ));
    }
    let text = format!(
        r#"
name = "browser"
mode = "stream"
replications = {replications}
seed = {seed}
strategies = ["ga:tier:waiting", "ga:segmented:waiting", "wlc", "wrr"]
[workload]
n_tiers = 1
n_resources = 3
n_jobs = {jobs}
arrival = {{ kind = "poisson", rate = {rate:?} }}
[ga]
generations = {generations}
"#
    );
    let scenario = Scenario::from_toml(&text).map_err(|e| e.to_string())?;
    let report = bench::run_scenario(&scenario).map_err(|e| e.to_string())?;
    if let Some(f) = report.failures.first() {
        return Err(format!("{} failed: {}", f.strategy, f.message));
    }
    let table = bench::compare_strategies(&report).map_err(|e| e.to_string())?;
    to_json(&ranked(&table))
}

fn to_json<T: Serialize>(value: &T) -> Result<String, String> {
    serde_json::to_string(value).map_err(|e| e.to_string())
}

fn js(r: Result<String, String>) -> Result<String, JsError> {
    r.map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn penalty_curve(ceiling: f64, scale: f64, cost: f64, max_x: f64, points: usize) -> Result<String, JsError> {
    js(penalty_curve_json(ceiling, scale, cost, max_x, points))
}

#[wasm_bindgen]
pub fn evolve_backlog(seed: u32, jobs: usize, queues: usize, generations: usize, objective: &str) -> Result<String, JsError> {
    js(evolve_backlog_json(seed.into(), jobs, queues, generations, objective))
}

#[wasm_bindgen]
pub fn compare_strategies(seed: u32, replications: usize, jobs: usize, rate: f64, generations: usize) -> Result<String, JsError> {
    js(compare_strategies_json(seed.into(), replications, jobs, rate, generations))
}
