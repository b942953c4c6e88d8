//! Heap-free replay of a recorded run.
//!
//! Time is scanned instant by instant. At each instant: departures, then
//! arrivals (external and forwarded, by job id, placed on the recorded
//! queue), then every idle resource with a waiting job starts its head, then
//! any recorded reorder is applied, then idle resources start again. The
//! result is the timing trace the run must have produced.

use std::collections::{BTreeMap, VecDeque};

use thiserror::Error;

use super::{Decision, History, Topology};
use crate::model::{JobId, JobStream, Time, TimingTrace};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("no recorded route for job {job} arriving at tier {tier} at t={time}")]
    MissingRoute { job: JobId, tier: usize, time: Time },
    #[error("recorded route for job {job} at tier {tier} (t={time}) was never used")]
    UnusedRoute { job: JobId, tier: usize, time: Time },
    #[error("route of job {job} names queue {queue}, tier has {n}")]
    BadQueue { job: JobId, queue: usize, n: usize },
    #[error("route of job {job} names position {position} in a queue of {len}")]
    BadPosition { job: JobId, position: usize, len: usize },
    #[error("reorder at t={time} is not a permutation of the waiting jobs")]
    BadReorder { time: Time },
    #[error("history topology does not match the stream")]
    Topology,
}

struct Resource {
    queue: VecDeque<JobId>,
    busy: Option<(JobId, Time)>,
}

/// Recomputes every job's arrival, start and departure from the stream and
/// the recorded decisions alone.
pub fn oracle_recompute(stream: &JobStream, topology: Topology, history: &History) -> Result<TimingTrace, OracleError> {
    if stream.n_tiers() != topology.tiers || topology.resources == 0 {
        return Err(OracleError::Topology);
    }
    let mut routes: BTreeMap<(Time, JobId, usize), (usize, usize)> = BTreeMap::new();
    let mut reorders: BTreeMap<Time, Vec<&Vec<Vec<Vec<JobId>>>>> = BTreeMap::new();
    for d in &history.decisions {
        match d {
            Decision::Route { time, job, tier, queue, position } => {
                routes.insert((*time, *job, *tier), (*queue, *position));
            }
            Decision::Reorder { time, queues } => reorders.entry(*time).or_default().push(queues),
        }
    }

    let mut tiers: Vec<Vec<Resource>> = (0..topology.tiers)
        .map(|_| (0..topology.resources).map(|_| Resource { queue: VecDeque::new(), busy: None }).collect())
        .collect();
    let mut trace = TimingTrace::for_stream(stream);
    let mut external = stream.jobs().iter().peekable();
    let mut forwarded: Vec<(JobId, usize)> = Vec::new();

    loop {
        let next_departure = tiers.iter().flatten().filter_map(|r| r.busy.map(|(_, end)| end)).min();
        let next_arrival = external.peek().map(|j| j.arrival);
        let next_reorder = reorders.keys().next().copied();
        let Some(now) = [next_departure, next_arrival, next_reorder].into_iter().flatten().min() else {
            break;
        };

        // departures
        let mut arrivals: Vec<(JobId, usize)> = Vec::new();
        for (tier, resources) in tiers.iter_mut().enumerate() {
            for r in resources.iter_mut() {
                if let Some((job, end)) = r.busy {
                    if end == now {
                        r.busy = None;
                        trace.jobs.get_mut(&job).expect("stream job").visits[tier].departure = Some(now);
                        if tier + 1 < topology.tiers {
                            forwarded.push((job, tier + 1));
                        }
                    }
                }
            }
        }
        arrivals.append(&mut forwarded);
        while let Some(job) = external.next_if(|j| j.arrival == now) {
            arrivals.push((job.id, 0));
        }
        arrivals.sort();

        for (job, tier) in arrivals {
            let (queue, position) = routes
                .remove(&(now, job, tier))
                .ok_or(OracleError::MissingRoute { job, tier, time: now })?;
            if queue >= topology.resources {
                return Err(OracleError::BadQueue { job, queue, n: topology.resources });
            }
            let q = &mut tiers[tier][queue].queue;
            if position > q.len() {
                return Err(OracleError::BadPosition { job, position, len: q.len() });
            }
            q.insert(position, job);
            trace.jobs.get_mut(&job).expect("stream job").visits[tier].arrival = Some(now);
        }

        start_idle(stream, &mut tiers, &mut trace, now);

        if let Some(list) = reorders.remove(&now) {
            for queues in list {
                apply_reorder(&mut tiers, queues, now)?;
            }
            start_idle(stream, &mut tiers, &mut trace, now);
        }
    }

    if let Some(((time, job, tier), _)) = routes.into_iter().next() {
        return Err(OracleError::UnusedRoute { job, tier, time });
    }
    Ok(trace)
}

fn start_idle(stream: &JobStream, tiers: &mut [Vec<Resource>], trace: &mut TimingTrace, now: Time) {
    for (tier, resources) in tiers.iter_mut().enumerate() {
        for (k, r) in resources.iter_mut().enumerate() {
            if r.busy.is_none() {
                if let Some(job) = r.queue.pop_front() {
                    let exec = stream.jobs()[job.index()].exec_times[tier];
                    r.busy = Some((job, now + exec));
                    let v = &mut trace.jobs.get_mut(&job).expect("stream job").visits[tier];
                    v.start = Some(now);
                    v.resource = Some(k);
                }
            }
        }
    }
}

fn apply_reorder(tiers: &mut [Vec<Resource>], queues: &[Vec<Vec<JobId>>], now: Time) -> Result<(), OracleError> {
    if queues.len() != tiers.len() {
        return Err(OracleError::BadReorder { time: now });
    }
    for (resources, next) in tiers.iter_mut().zip(queues) {
        if next.len() != resources.len() {
            return Err(OracleError::BadReorder { time: now });
        }
        let mut before: Vec<JobId> = resources.iter().flat_map(|r| r.queue.iter().copied()).collect();
        let mut after: Vec<JobId> = next.iter().flatten().copied().collect();
        before.sort();
        after.sort();
        if before != after {
            return Err(OracleError::BadReorder { time: now });
        }
        for (r, order) in resources.iter_mut().zip(next) {
            r.queue = order.iter().copied().collect();
        }
    }
    Ok(())
}

/// First disagreement between two traces, in (job, tier, field) order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mismatch {
    pub job: JobId,
    pub tier: usize,
    pub field: &'static str,
    pub expected: Option<u64>,
    pub actual: Option<u64>,
}

pub fn compare_traces(expected: &TimingTrace, actual: &TimingTrace) -> Option<Mismatch> {
    let ids: std::collections::BTreeSet<JobId> = expected.jobs.keys().chain(actual.jobs.keys()).copied().collect();
    for job in ids {
        let (Some(e), Some(a)) = (expected.jobs.get(&job), actual.jobs.get(&job)) else {
            return Some(Mismatch { job, tier: 0, field: "presence", expected: None, actual: None });
        };
        let n = e.visits.len().max(a.visits.len());
        for tier in 0..n {
            let ev = e.visits.get(tier).copied().unwrap_or_default();
            let av = a.visits.get(tier).copied().unwrap_or_default();
            let fields = [
                ("arrival", ev.arrival, av.arrival),
                ("start", ev.start, av.start),
                ("departure", ev.departure, av.departure),
                ("resource", ev.resource.map(|k| k as u64), av.resource.map(|k| k as u64)),
            ];
            for (field, x, y) in fields {
                if x != y {
                    return Some(Mismatch { job, tier, field, expected: x, actual: y });
                }
            }
        }
    }
    None
}
