use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::report::{ConvergenceRow, Failure, Report, Row};
use super::scenario::{Mode, Scenario};
use super::BenchError;
use crate::baselines::{BaselineKind, Dispatcher};
use crate::ga::GaConfig;
use crate::model::{JobId, JobStream, Schedule, Snapshot, TimingTrace};
use crate::penalty::{self, Objective, PenaltyParams};
use crate::simulator::{self, Topology};
use crate::splitmix;
use crate::strategy::{self, BaselineScheduler, GaScheduler, StrategySpec, UnitTrace};
use crate::workload::{generate_stream, ArrivalProcess};

const SIZE_SALT: u64 = 0x5123;
const GA_SALT: u64 = 0x6a09;

/// Seed of replication `r`; every strategy of that replication sees the same
/// stream and GA seed.
pub fn replication_seed(scenario_seed: u64, r: usize) -> u64 {
    splitmix(scenario_seed, r as u64)
}

/// Timing trace of one stream-mode cell.
#[derive(Debug, Clone)]
pub struct CellTrace {
    pub strategy: String,
    pub replication: usize,
    pub trace: TimingTrace,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub report: Report,
    /// Stream of each replication, in stream mode.
    pub streams: Vec<Option<JobStream>>,
    /// Filled in stream mode when traces were requested.
    pub traces: Vec<CellTrace>,
}

pub fn run_scenario(scenario: &Scenario) -> Result<Report, BenchError> {
    Ok(run_scenario_with(scenario, false)?.report)
}

/// Runs every strategy on every replication. A failing cell is recorded in
/// `report.failures` and the rest of the report is still produced.
pub fn run_scenario_with(scenario: &Scenario, keep_traces: bool) -> Result<RunOutput, BenchError> {
    scenario.validate()?;
    let labels = scenario.labels();
    let reps: Vec<usize> = (0..scenario.replications).collect();

    #[cfg(feature = "parallel")]
    let outcomes: Vec<Replication> = {
        use rayon::prelude::*;
        reps.par_iter().map(|&r| replicate(scenario, r, keep_traces)).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let outcomes: Vec<Replication> = reps.iter().map(|&r| replicate(scenario, r, keep_traces)).collect();

    let mut report = Report { scenario: scenario.name.clone(), ..Default::default() };
    let mut traces = Vec::new();
    for (i, label) in labels.iter().enumerate() {
        for (r, rep) in outcomes.iter().enumerate() {
            match &rep.cells[i] {
                Ok(cell) => {
                    report.rows.extend(cell.measures.iter().map(|m| {
                        Row::new(label, r, rep.seed, m.entity.clone(), m.count, m.initial, m.enhanced)
                    }));
                    for (epoch, unit) in &cell.units {
                        report.convergence.extend(unit.trace.iter().map(|g| ConvergenceRow {
                            strategy: label.clone(),
                            replication: r,
                            epoch: *epoch,
                            unit: unit.unit.clone(),
                            generation: g.generation,
                            best: g.best,
                            mean: g.mean,
                        }));
                    }
                    if let Some(trace) = &cell.trace {
                        traces.push(CellTrace { strategy: label.clone(), replication: r, trace: trace.clone() });
                    }
                }
                Err(message) => report.failures.push(Failure {
                    strategy: label.clone(),
                    replication: r,
                    seed: rep.seed,
                    message: message.clone(),
                }),
            }
        }
    }
    let streams = outcomes.into_iter().map(|rep| rep.stream).collect();
    Ok(RunOutput { report, streams, traces })
}

struct Replication {
    seed: u64,
    stream: Option<JobStream>,
    cells: Vec<Result<Cell, String>>,
}

struct Cell {
    measures: Vec<EntityMeasure>,
    units: Vec<(u64, UnitTrace)>,
    trace: Option<TimingTrace>,
}

struct EntityMeasure {
    entity: String,
    count: usize,
    initial: (f64, f64),
    enhanced: (f64, f64),
}

fn replicate(scenario: &Scenario, r: usize, keep_traces: bool) -> Replication {
    let seed = replication_seed(scenario.seed, r);
    let n = scenario.strategies.len();
    let stream = match build_stream(scenario, seed) {
        Ok(s) => s,
        Err(e) => return Replication { seed, stream: None, cells: (0..n).map(|_| Err(e.clone())).collect() },
    };
    let ga = GaConfig { seed: splitmix(seed ^ scenario.ga.seed, GA_SALT), ..scenario.ga };
    let cells = match scenario.mode {
        Mode::Snapshot => snapshot_cells(scenario, &stream, &ga),
        Mode::Stream => stream_cells(scenario, &stream, &ga, keep_traces),
    };
    let stream = (scenario.mode == Mode::Stream).then_some(stream);
    Replication { seed, stream, cells }
}

fn build_stream(scenario: &Scenario, seed: u64) -> Result<JobStream, String> {
    let mut config = scenario.workload.clone();
    config.seed = seed;
    if let (ArrivalProcess::Batch, Some(b), Mode::Snapshot) = (config.arrival, scenario.backlog, scenario.mode) {
        let mut rng = ChaCha8Rng::seed_from_u64(splitmix(seed, SIZE_SALT));
        config.n_jobs = rng.random_range(b.min..=b.max);
    }
    generate_stream(&config).map_err(|e| e.to_string())
}

/// The frozen state every strategy plans on. Batch streams are dispatched in
/// id order with the FCFS rule into tier 1; Poisson streams are run under
/// FCFS until the backlog is large enough.
pub fn initial_snapshot<'a>(
    stream: &'a JobStream,
    topology: Topology,
    min_pending: Option<usize>,
) -> Result<Snapshot<'a>, String> {
    if stream.jobs().iter().all(|j| j.arrival == 0) {
        let schedule = fcfs_backlog(stream.jobs().iter().map(|j| j.id), topology);
        return Snapshot::backlog(stream, schedule, 0).map_err(|e| e.to_string());
    }
    let target = min_pending.unwrap_or(2);
    simulator::capture_backlog(stream, topology, target)
        .map_err(|e| e.to_string())?
        .ok_or_else(|| format!("the FCFS run never held {target} waiting jobs"))
}

fn snapshot_cells(scenario: &Scenario, stream: &JobStream, ga: &GaConfig) -> Vec<Result<Cell, String>> {
    let topology = scenario.topology();
    let snapshot = match initial_snapshot(stream, topology, scenario.backlog.map(|b| b.min)) {
        Ok(s) => s,
        Err(e) => return scenario.strategies.iter().map(|_| Err(e.clone())).collect(),
    };
    let initial = snapshot_measures(scenario.metric, &snapshot.schedule, &snapshot, &scenario.penalty, topology);
    scenario
        .strategies
        .iter()
        .map(|&spec| {
            let initial = initial.clone()?;
            let plan = strategy::plan(spec, &snapshot, ga, &scenario.penalty).map_err(|e| e.to_string())?;
            let enhanced = snapshot_measures(scenario.metric, &plan.schedule, &snapshot, &scenario.penalty, topology)?;
            let units = if scenario.convergence { plan.units.into_iter().map(|u| (0, u)).collect() } else { vec![] };
            Ok(Cell { measures: pair(initial, enhanced), units, trace: None })
        })
        .collect()
}

fn stream_cells(scenario: &Scenario, stream: &JobStream, ga: &GaConfig, keep_traces: bool) -> Vec<Result<Cell, String>> {
    let topology = scenario.topology();
    let fcfs = BaselineScheduler::new(BaselineKind::Fcfs, topology)
        .map_err(|e| e.to_string())
        .and_then(|mut s| simulator::run(stream, topology, &mut s, scenario.sim).map_err(|e| e.to_string()));
    let initial = fcfs.as_ref().map_err(Clone::clone).and_then(|rep| {
        stream_measures(scenario.metric, stream, &rep.trace, &scenario.penalty, topology)
    });
    scenario
        .strategies
        .iter()
        .map(|&spec| {
            let initial = initial.clone()?;
            let (trace, units) = match spec {
                StrategySpec::Baseline(BaselineKind::Fcfs) => (fcfs.as_ref().map_err(Clone::clone)?.trace.clone(), vec![]),
                StrategySpec::Baseline(kind) => {
                    let mut s = BaselineScheduler::new(kind, topology).map_err(|e| e.to_string())?;
                    let rep = simulator::run(stream, topology, &mut s, scenario.sim).map_err(|e| e.to_string())?;
                    (rep.trace, vec![])
                }
                StrategySpec::Ga { .. } => {
                    let mut s = GaScheduler::new(spec, topology, *ga, scenario.penalty).map_err(|e| e.to_string())?;
                    s.record = scenario.convergence;
                    let rep = simulator::run(stream, topology, &mut s, scenario.sim).map_err(|e| e.to_string())?;
                    if let Some(e) = s.failure {
                        return Err(e.to_string());
                    }
                    if !rep.finished {
                        return Err("simulation stopped before every job departed".into());
                    }
                    (rep.trace, s.traces)
                }
            };
            let enhanced = stream_measures(scenario.metric, stream, &trace, &scenario.penalty, topology)?;
            Ok(Cell { measures: pair(initial, enhanced), units, trace: keep_traces.then_some(trace) })
        })
        .collect()
}

/// (entity, jobs, linear total, penalty total)
type Measures = Vec<(String, usize, f64, f64)>;

fn pair(initial: Measures, enhanced: Measures) -> Vec<EntityMeasure> {
    initial
        .into_iter()
        .zip(enhanced)
        .map(|(i, e)| {
            debug_assert_eq!(i.0, e.0);
            EntityMeasure { entity: e.0, count: e.1, initial: (i.2, i.3), enhanced: (e.2, e.3) }
        })
        .collect()
}

fn entity_names(topology: Topology) -> Vec<String> {
    let mut out = vec!["total".to_string()];
    for j in 0..topology.tiers {
        out.push(format!("tier{}", j + 1));
        for k in 0..topology.resources {
            out.push(format!("tier{}/queue{}", j + 1, k + 1));
        }
    }
    out
}

/// Slot of a tier or queue in `entity_names` order.
fn slot(topology: Topology, tier: usize, queue: Option<usize>) -> usize {
    1 + tier * (topology.resources + 1) + queue.map_or(0, |k| k + 1)
}

struct Accumulator {
    names: Vec<String>,
    cells: Vec<(usize, f64, f64)>,
}

impl Accumulator {
    fn new(topology: Topology) -> Self {
        let names = entity_names(topology);
        let cells = vec![(0, 0.0, 0.0); names.len()];
        Self { names, cells }
    }

    fn add(&mut self, slot: usize, value: f64, params: &PenaltyParams) {
        let c = &mut self.cells[slot];
        c.0 += 1;
        c.1 += value;
        c.2 += params.curve(value.max(0.0));
    }

    fn finish(self, keep_breakdown: bool) -> Measures {
        let n = if keep_breakdown { self.names.len() } else { 1 };
        self.names.into_iter().zip(self.cells).take(n).map(|(name, (c, l, p))| (name, c, l, p)).collect()
    }
}

fn snapshot_measures(
    metric: Objective,
    schedule: &Schedule,
    snapshot: &Snapshot<'_>,
    params: &PenaltyParams,
    topology: Topology,
) -> Result<Measures, String> {
    let costs = penalty::job_costs(metric, schedule, snapshot, params).map_err(|e| e.to_string())?;
    let mut acc = Accumulator::new(topology);
    for c in costs {
        acc.add(0, c.cost, params);
        acc.add(slot(topology, c.tier, None), c.cost, params);
        acc.add(slot(topology, c.tier, Some(c.queue)), c.cost, params);
    }
    Ok(acc.finish(true))
}

fn stream_measures(
    metric: Objective,
    stream: &JobStream,
    trace: &TimingTrace,
    params: &PenaltyParams,
    topology: Topology,
) -> Result<Measures, String> {
    let mut acc = Accumulator::new(topology);
    for job in stream.jobs() {
        let timing = trace.get(job.id).ok_or_else(|| format!("job {} missing from trace", job.id))?;
        let incomplete = || format!("job {} did not finish", job.id);
        match metric {
            Objective::Waiting => {
                let total = timing.total_wait().ok_or_else(incomplete)?;
                acc.add(0, params.service_weight(job) * total as f64, params);
                for (j, visit) in timing.visits.iter().enumerate() {
                    let w = params.service_weight(job) * visit.waited().ok_or_else(incomplete)? as f64;
                    let k = visit.resource.ok_or_else(incomplete)?;
                    acc.add(slot(topology, j, None), w, params);
                    acc.add(slot(topology, j, Some(k)), w, params);
                }
            }
            Objective::MultitierAllowance | Objective::TierAllowance => {
                let rt = crate::model::response_time(trace, job).map_err(|e| e.to_string())?;
                let overrun = rt as f64 - job.deadline() as f64;
                acc.add(0, params.violation_weight(job) * params.clamp(overrun), params);
            }
        }
    }
    Ok(acc.finish(metric == Objective::Waiting))
}

/// Ids of a backlog in dispatch order; handy for building snapshots by hand.
pub fn fcfs_backlog(ids: impl IntoIterator<Item = JobId>, topology: Topology) -> Schedule {
    let mut schedule = Schedule::idle(topology.tiers, topology.resources);
    let mut d = Dispatcher::new(BaselineKind::Fcfs, topology.resources).expect("at least one resource");
    for id in ids {
        let k = d.assign(&schedule.tiers[0]);
        schedule.tiers[0].queues[k].push(id);
    }
    schedule
}
