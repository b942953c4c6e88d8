//! Domain types for an N-tier environment of identical resources, and the
//! closed-form timing arithmetic over them: queue waits, response times,
//! waiting allowances and the multi-tier wait estimators used at a
//! scheduling epoch.
//!
//! All times are integer time units. Tiers and queues are 0-based in the API;
//! job ids are 1-based and follow arrival order.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Non-negative integer time units.
pub type Time = u64;

/// Arrival-order index of a job within its stream (1-based).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct JobId(pub u32);

impl JobId {
    /// Dense 0-based index, for vectors keyed by id.
    pub fn index(self) -> usize {
        (self.0 as usize).saturating_sub(1)
    }
}

impl fmt::Display for JobId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "J{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("job {job}: expected {expected} execution times, got {got}")]
    ExecTimeCount { job: JobId, expected: usize, got: usize },
    #[error("job {job}: execution time at tier {tier} must be positive")]
    NonPositiveExec { job: JobId, tier: usize },
    #[error("job {job}: deadline {deadline} does not exceed total execution time {total}")]
    NoAllowance { job: JobId, deadline: i64, total: Time },
    #[error("job {job}: {field} must be positive and finite, got {value}")]
    BadCost { job: JobId, field: &'static str, value: f64 },
    #[error("unknown job {0}")]
    UnknownJob(JobId),
    #[error("tier index {tier} out of range for {n_tiers} tiers")]
    TierOutOfRange { tier: usize, n_tiers: usize },
    #[error("job {0} has not departed the last tier")]
    Incomplete(JobId),
    #[error("job {job} is not waiting in tier {tier}")]
    NotResident { job: JobId, tier: usize },
    #[error("job {job} appears more than once in tier {tier}")]
    Duplicate { job: JobId, tier: usize },
    #[error("tier {tier}: {detail}")]
    Membership { tier: usize, detail: String },
    #[error("stream position {position} holds {found}, expected J{}", position + 1)]
    NonContiguousIds { position: usize, found: JobId },
    #[error("job {job} arrives before its predecessor")]
    ArrivalOrder { job: JobId },
    #[error("decision time {now} precedes arrival {arrival} of job {job}")]
    TimeBeforeArrival { job: JobId, now: Time, arrival: Time },
    #[error("stream must have at least one tier")]
    NoTiers,
}

/// A client job: arrival at the first tier, per-tier execution demand,
/// target completion time and its two differentiated cost coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct Job {
    pub id: JobId,
    /// Arrival time at tier 1. Arrivals at later tiers are departures from
    /// the previous tier and live in [`TimingTrace`].
    pub arrival: Time,
    pub exec_times: Vec<Time>,
    pub target_completion: Time,
    /// Cost per unit of waiting time.
    pub service_cost: f64,
    /// Cost per unit of SLA violation time.
    pub violation_cost: f64,
}

impl Job {
    pub fn validate(&self, n_tiers: usize) -> Result<(), ModelError> {
        if self.exec_times.len() != n_tiers {
            return Err(ModelError::ExecTimeCount {
                job: self.id,
                expected: n_tiers,
                got: self.exec_times.len(),
            });
        }
        if let Some(tier) = self.exec_times.iter().position(|&e| e == 0) {
            return Err(ModelError::NonPositiveExec { job: self.id, tier });
        }
        let deadline = self.target_completion as i64 - self.arrival as i64;
        if deadline <= self.total_exec() as i64 {
            return Err(ModelError::NoAllowance {
                job: self.id,
                deadline,
                total: self.total_exec(),
            });
        }
        for (field, value) in [("psi", self.service_cost), ("zeta", self.violation_cost)] {
            if !(value.is_finite() && value > 0.0) {
                return Err(ModelError::BadCost { job: self.id, field, value });
            }
        }
        Ok(())
    }

    pub fn n_tiers(&self) -> usize {
        self.exec_times.len()
    }

    /// Total execution time over all tiers.
    pub fn total_exec(&self) -> Time {
        self.exec_times.iter().sum()
    }

    /// Service deadline, measured from the arrival at tier 1.
    pub fn deadline(&self) -> Time {
        self.target_completion.saturating_sub(self.arrival)
    }

    /// Multi-tier waiting allowance: deadline minus total execution time.
    pub fn allowance(&self) -> Time {
        self.deadline().saturating_sub(self.total_exec())
    }

    pub fn exec_at(&self, tier: usize) -> Result<Time, ModelError> {
        self.exec_times.get(tier).copied().ok_or(ModelError::TierOutOfRange {
            tier,
            n_tiers: self.exec_times.len(),
        })
    }
}

/// Deadline, multi-tier allowance and its per-tier split for one job.
#[derive(Debug, Clone, PartialEq)]
pub struct Allowances {
    pub deadline: Time,
    pub multitier_allowance: Time,
    pub tier_allowances: Vec<f64>,
}

impl Allowances {
    pub fn of(job: &Job) -> Result<Self, ModelError> {
        let tier_allowances = (0..job.n_tiers())
            .map(|j| tier_allowance(job, j))
            .collect::<Result<_, _>>()?;
        Ok(Self {
            deadline: job.deadline(),
            multitier_allowance: job.allowance(),
            tier_allowances,
        })
    }
}

/// Share of the multi-tier allowance granted to `tier`, proportional to the
/// job's execution time there.
pub fn tier_allowance(job: &Job, tier: usize) -> Result<f64, ModelError> {
    let exec = job.exec_at(tier)?;
    let total = job.total_exec();
    if total == 0 {
        return Err(ModelError::NonPositiveExec { job: job.id, tier });
    }
    Ok(job.allowance() as f64 * exec as f64 / total as f64)
}

/// Sum of the per-tier allowances of tiers `0..=tier`.
pub fn cumulative_tier_allowance(job: &Job, tier: usize) -> Result<f64, ModelError> {
    (0..=tier).map(|j| tier_allowance(job, j)).sum()
}

/// An immutable, arrival-ordered job stream. Ids are `1..=len`.
#[derive(Debug, Clone, PartialEq)]
pub struct JobStream {
    n_tiers: usize,
    jobs: Vec<Job>,
}

impl JobStream {
    pub fn new(n_tiers: usize, jobs: Vec<Job>) -> Result<Self, ModelError> {
        if n_tiers == 0 {
            return Err(ModelError::NoTiers);
        }
        for (position, job) in jobs.iter().enumerate() {
            if job.id.0 as usize != position + 1 {
                return Err(ModelError::NonContiguousIds { position, found: job.id });
            }
            job.validate(n_tiers)?;
            if position > 0 && job.arrival < jobs[position - 1].arrival {
                return Err(ModelError::ArrivalOrder { job: job.id });
            }
        }
        Ok(Self { n_tiers, jobs })
    }

    pub fn n_tiers(&self) -> usize {
        self.n_tiers
    }

    pub fn jobs(&self) -> &[Job] {
        &self.jobs
    }

    pub fn len(&self) -> usize {
        self.jobs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.jobs.is_empty()
    }

    pub fn get(&self, id: JobId) -> Option<&Job> {
        self.jobs.get(id.index()).filter(|j| j.id == id)
    }

    pub fn job(&self, id: JobId) -> Result<&Job, ModelError> {
        self.get(id).ok_or(ModelError::UnknownJob(id))
    }
}

/// Whether the residual service time of a resource's current job counts
/// toward the remaining wait of every job queued behind it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ResidualMode {
    #[default]
    Include,
    /// Predecessor execution times only.
    Ignore,
}

/// Remaining wait of every job in `order`: the residual of the job in
/// service plus the execution times of all queued predecessors.
pub fn queue_waiting_times<F>(order: &[JobId], exec: F, residual: Time) -> Result<Vec<Time>, ModelError>
where
    F: Fn(JobId) -> Option<Time>,
{
    let mut ahead = residual;
    order
        .iter()
        .map(|&id| {
            let e = exec(id).ok_or(ModelError::UnknownJob(id))?;
            let wait = ahead;
            ahead += e;
            Ok(wait)
        })
        .collect()
}

/// A job occupying a resource.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InService {
    pub job: JobId,
    pub started: Time,
}

/// The resource queues of one tier. Each queue lists not-yet-started jobs,
/// head first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TierState {
    pub queues: Vec<Vec<JobId>>,
    pub executing: Vec<Option<InService>>,
}

impl TierState {
    pub fn idle(n_resources: usize) -> Self {
        Self {
            queues: vec![Vec::new(); n_resources],
            executing: vec![None; n_resources],
        }
    }

    pub fn n_resources(&self) -> usize {
        self.queues.len()
    }

    pub fn pending(&self) -> impl Iterator<Item = JobId> + '_ {
        self.queues.iter().flatten().copied()
    }

    pub fn pending_count(&self) -> usize {
        self.queues.iter().map(Vec::len).sum()
    }

    /// Jobs queued at or being served by resource `queue`.
    pub fn load(&self, queue: usize) -> usize {
        self.queues[queue].len() + usize::from(self.executing[queue].is_some())
    }

    /// (queue, position) of a waiting job.
    pub fn locate(&self, job: JobId) -> Option<(usize, usize)> {
        self.queues
            .iter()
            .enumerate()
            .find_map(|(k, q)| q.iter().position(|&h| h == job).map(|pos| (k, pos)))
    }

    pub fn validate(&self, tier: usize) -> Result<(), ModelError> {
        if self.queues.len() != self.executing.len() {
            return Err(ModelError::Membership {
                tier,
                detail: format!(
                    "{} queues but {} resources",
                    self.queues.len(),
                    self.executing.len()
                ),
            });
        }
        let mut seen = BTreeSet::new();
        let running = self.executing.iter().flatten().map(|s| s.job);
        for job in self.pending().chain(running) {
            if !seen.insert(job) {
                return Err(ModelError::Duplicate { job, tier });
            }
        }
        Ok(())
    }
}

/// Orderings of all tiers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Schedule {
    pub tiers: Vec<TierState>,
}

impl Schedule {
    pub fn idle(n_tiers: usize, n_resources: usize) -> Self {
        Self { tiers: vec![TierState::idle(n_resources); n_tiers] }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        self.tiers.iter().enumerate().try_for_each(|(j, t)| t.validate(j))
    }

    pub fn pending_count(&self) -> usize {
        self.tiers.iter().map(TierState::pending_count).sum()
    }

    /// Checks that `other` is a reordering of `self`: the same resources,
    /// the same jobs in service, and per tier the same set of waiting jobs.
    pub fn check_reordering(&self, other: &Schedule) -> Result<(), ModelError> {
        if self.tiers.len() != other.tiers.len() {
            return Err(ModelError::Membership {
                tier: 0,
                detail: format!("{} tiers, expected {}", other.tiers.len(), self.tiers.len()),
            });
        }
        other.validate()?;
        for (j, (a, b)) in self.tiers.iter().zip(&other.tiers).enumerate() {
            if a.n_resources() != b.n_resources() {
                return Err(ModelError::Membership {
                    tier: j,
                    detail: format!("{} resources, expected {}", b.n_resources(), a.n_resources()),
                });
            }
            if a.executing != b.executing {
                return Err(ModelError::Membership {
                    tier: j,
                    detail: "jobs in service were changed".into(),
                });
            }
            let lhs: BTreeSet<_> = a.pending().collect();
            let rhs: BTreeSet<_> = b.pending().collect();
            if lhs != rhs {
                let stray = lhs.symmetric_difference(&rhs).next().copied();
                return Err(ModelError::Membership {
                    tier: j,
                    detail: format!("waiting set differs (first difference: {stray:?})"),
                });
            }
        }
        Ok(())
    }
}

/// One job's passage through one tier.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Visit {
    pub arrival: Option<Time>,
    pub start: Option<Time>,
    pub departure: Option<Time>,
    pub resource: Option<usize>,
}

impl Visit {
    /// Realized wait: start of service minus arrival.
    pub fn waited(&self) -> Option<Time> {
        Some(self.start? - self.arrival?)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JobTiming {
    pub visits: Vec<Visit>,
}

impl JobTiming {
    pub fn new(n_tiers: usize) -> Self {
        Self { visits: vec![Visit::default(); n_tiers] }
    }

    /// Sum of realized waits; `None` until every tier has started the job.
    pub fn total_wait(&self) -> Option<Time> {
        self.visits.iter().map(Visit::waited).sum()
    }

    pub fn final_departure(&self) -> Option<Time> {
        self.visits.last().and_then(|v| v.departure)
    }
}

/// Realized per-job, per-tier timings.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TimingTrace {
    pub jobs: BTreeMap<JobId, JobTiming>,
}

impl TimingTrace {
    pub fn for_stream(stream: &JobStream) -> Self {
        let jobs = stream
            .jobs()
            .iter()
            .map(|j| (j.id, JobTiming::new(stream.n_tiers())))
            .collect();
        Self { jobs }
    }

    pub fn get(&self, job: JobId) -> Option<&JobTiming> {
        self.jobs.get(&job)
    }

    /// Realized waits of `job` in tiers `0..tier`.
    pub fn prior_wait(&self, job: JobId, tier: usize) -> Result<Time, ModelError> {
        let timing = self.jobs.get(&job).ok_or(ModelError::UnknownJob(job))?;
        timing.visits[..tier]
            .iter()
            .map(Visit::waited)
            .sum::<Option<Time>>()
            .ok_or(ModelError::NotResident { job, tier })
    }
}

/// End-to-end response time `D_last - A_first` of a departed job.
pub fn response_time(trace: &TimingTrace, job: &Job) -> Result<Time, ModelError> {
    let timing = trace.get(job.id).ok_or(ModelError::UnknownJob(job.id))?;
    let departure = timing.final_departure().ok_or(ModelError::Incomplete(job.id))?;
    Ok(departure - job.arrival)
}

/// Where a waiting job stands at a decision epoch.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Progress {
    /// Tier the job currently waits in.
    pub tier: usize,
    /// Arrival time at that tier.
    pub tier_arrival: Time,
    /// Realized waiting in all earlier tiers.
    pub prior_wait: Time,
}

/// Frozen system state at a decision epoch: the current schedule plus the
/// progress of every waiting job.
#[derive(Debug, Clone)]
pub struct Snapshot<'a> {
    pub stream: &'a JobStream,
    pub now: Time,
    pub schedule: Schedule,
    pub progress: BTreeMap<JobId, Progress>,
}

impl<'a> Snapshot<'a> {
    /// Builds the progress map for every waiting job of `schedule` from the
    /// realized trace.
    pub fn from_trace(
        stream: &'a JobStream,
        schedule: Schedule,
        trace: &TimingTrace,
        now: Time,
    ) -> Result<Self, ModelError> {
        schedule.validate()?;
        let mut progress = BTreeMap::new();
        for (tier, state) in schedule.tiers.iter().enumerate() {
            for job in state.pending() {
                let timing = trace.get(job).ok_or(ModelError::UnknownJob(job))?;
                let tier_arrival = timing.visits[tier]
                    .arrival
                    .ok_or(ModelError::NotResident { job, tier })?;
                let prior_wait = trace.prior_wait(job, tier)?;
                progress.insert(job, Progress { tier, tier_arrival, prior_wait });
            }
        }
        let snapshot = Self { stream, now, schedule, progress };
        snapshot.validate()?;
        Ok(snapshot)
    }

    /// A backlog where every job of `schedule` has just arrived at tier 1
    /// at its stream arrival time and nothing is in service.
    pub fn backlog(stream: &'a JobStream, schedule: Schedule, now: Time) -> Result<Self, ModelError> {
        let mut progress = BTreeMap::new();
        for (tier, state) in schedule.tiers.iter().enumerate() {
            for job in state.pending() {
                let arrival = stream.job(job)?.arrival;
                progress.insert(job, Progress { tier, tier_arrival: arrival, prior_wait: 0 });
            }
        }
        let snapshot = Self { stream, now, schedule, progress };
        snapshot.validate()?;
        Ok(snapshot)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        self.schedule.validate()?;
        for (tier, state) in self.schedule.tiers.iter().enumerate() {
            for job in state.pending() {
                let p = self.progress.get(&job).ok_or(ModelError::NotResident { job, tier })?;
                if p.tier != tier {
                    return Err(ModelError::NotResident { job, tier });
                }
                self.stream.job(job)?;
                if p.tier_arrival > self.now {
                    return Err(ModelError::TimeBeforeArrival {
                        job,
                        now: self.now,
                        arrival: p.tier_arrival,
                    });
                }
            }
        }
        if self.progress.len() != self.schedule.pending_count() {
            return Err(ModelError::Membership {
                tier: 0,
                detail: "progress entries without a queue position".into(),
            });
        }
        Ok(())
    }

    /// Residual service time of the job on resource `queue` of `tier`.
    pub fn residual(&self, tier: usize, queue: usize, mode: ResidualMode) -> Time {
        if mode == ResidualMode::Ignore {
            return 0;
        }
        match self.schedule.tiers[tier].executing[queue] {
            Some(s) => {
                let exec = self.stream.get(s.job).map_or(0, |j| j.exec_times[tier]);
                (s.started + exec).saturating_sub(self.now)
            }
            None => 0,
        }
    }

    /// Elapsed waiting in the job's current tier.
    pub fn elapsed_wait(&self, job: JobId) -> Result<Time, ModelError> {
        let p = self.progress.get(&job).ok_or(ModelError::UnknownJob(job))?;
        Ok(self.now.saturating_sub(p.tier_arrival))
    }
}

/// Remaining wait of `job` under `schedule`, which must hold it in the tier
/// recorded by the snapshot.
pub fn remaining_wait(
    snapshot: &Snapshot<'_>,
    schedule: &Schedule,
    job: JobId,
    mode: ResidualMode,
) -> Result<Time, ModelError> {
    let p = snapshot.progress.get(&job).ok_or(ModelError::UnknownJob(job))?;
    let state = &schedule.tiers[p.tier];
    let (queue, position) = state
        .locate(job)
        .ok_or(ModelError::NotResident { job, tier: p.tier })?;
    let waits = queue_waiting_times(
        &state.queues[queue][..=position],
        |h| snapshot.stream.get(h).map(|j| j.exec_times[p.tier]),
        snapshot.residual(p.tier, queue, mode),
    )?;
    Ok(waits[position])
}

/// Expected multi-tier wait of a job waiting in `tier`: realized waits in
/// earlier tiers, plus elapsed and remaining wait in the current one. Later
/// tiers are not forecast.
pub fn expected_multitier_wait(
    snapshot: &Snapshot<'_>,
    job: JobId,
    tier: usize,
    mode: ResidualMode,
) -> Result<Time, ModelError> {
    let p = snapshot.progress.get(&job).ok_or(ModelError::NotResident { job, tier })?;
    if p.tier != tier {
        return Err(ModelError::NotResident { job, tier });
    }
    Ok(p.prior_wait + expected_tier_wait(snapshot, job, mode)?)
}

/// Expected wait in the job's current tier: elapsed plus remaining.
pub fn expected_tier_wait(snapshot: &Snapshot<'_>, job: JobId, mode: ResidualMode) -> Result<Time, ModelError> {
    Ok(snapshot.elapsed_wait(job)? + remaining_wait(snapshot, &snapshot.schedule, job, mode)?)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub(crate) fn job(id: u32, arrival: Time, exec: &[Time], allowance: Time, cost: f64) -> Job {
        let total: Time = exec.iter().sum();
        Job {
            id: JobId(id),
            arrival,
            exec_times: exec.to_vec(),
            target_completion: arrival + total + allowance,
            service_cost: cost,
            violation_cost: cost,
        }
    }

    fn ids(v: &[u32]) -> Vec<JobId> {
        v.iter().map(|&i| JobId(i)).collect()
    }

    #[test]
    fn queue_waits_by_hand() {
        let e = |id: JobId| match id.0 {
            3 => Some(4),
            5 => Some(1),
            2 => Some(6),
            _ => None,
        };
        assert_eq!(queue_waiting_times(&ids(&[3, 5, 2]), e, 0).unwrap(), vec![0, 4, 5]);
        assert_eq!(queue_waiting_times(&ids(&[7]), |_| Some(9), 0).unwrap(), vec![0]);
        let e = |id: JobId| [5, 3].get(id.index()).copied();
        assert_eq!(queue_waiting_times(&ids(&[1, 2]), e, 2).unwrap(), vec![2, 7]);
    }

    #[test]
    fn queue_waits_reject_unknown_id() {
        let err = queue_waiting_times(&ids(&[1, 9]), |id| (id.0 == 1).then_some(3), 0).unwrap_err();
        assert_eq!(err, ModelError::UnknownJob(JobId(9)));
    }

    #[test]
    fn tier_allowance_split() {
        let j = job(1, 0, &[2, 3], 100, 1.0);
        assert_eq!(tier_allowance(&j, 0).unwrap(), 40.0);
        assert_eq!(tier_allowance(&j, 1).unwrap(), 60.0);
        let single = job(2, 0, &[7], 33, 1.0);
        assert_eq!(tier_allowance(&single, 0).unwrap(), 33.0);
        let even = job(3, 0, &[5, 5, 5, 5], 80, 1.0);
        for t in 0..4 {
            assert_eq!(tier_allowance(&even, t).unwrap(), 20.0);
        }
        assert!(matches!(tier_allowance(&even, 4), Err(ModelError::TierOutOfRange { .. })));
    }

    #[test]
    fn job_invariants() {
        let mut j = job(1, 10, &[2, 3], 1, 1.0);
        assert!(j.validate(2).is_ok());
        assert!(matches!(j.validate(3), Err(ModelError::ExecTimeCount { .. })));
        j.target_completion = 15;
        assert!(matches!(j.validate(2), Err(ModelError::NoAllowance { .. })));
        let mut k = job(1, 0, &[2, 0], 5, 1.0);
        assert!(matches!(k.validate(2), Err(ModelError::NonPositiveExec { tier: 1, .. })));
        k.exec_times[1] = 1;
        k.violation_cost = 0.0;
        assert!(matches!(k.validate(2), Err(ModelError::BadCost { field: "zeta", .. })));
    }

    #[test]
    fn stream_requires_contiguous_ids() {
        let jobs = vec![job(1, 0, &[1], 1, 1.0), job(3, 0, &[1], 1, 1.0)];
        assert!(matches!(
            JobStream::new(1, jobs),
            Err(ModelError::NonContiguousIds { position: 1, .. })
        ));
    }

    fn two_tier_snapshot(stream: &JobStream) -> Snapshot<'_> {
        // Job 1 waits in tier 2 (tier index 1) behind job 3; job 2 waits in tier 1.
        let mut schedule = Schedule::idle(2, 1);
        schedule.tiers[1].queues[0] = ids(&[3, 1]);
        schedule.tiers[0].queues[0] = ids(&[2]);
        let mut progress = BTreeMap::new();
        progress.insert(JobId(1), Progress { tier: 1, tier_arrival: 8, prior_wait: 4 });
        progress.insert(JobId(3), Progress { tier: 1, tier_arrival: 9, prior_wait: 0 });
        progress.insert(JobId(2), Progress { tier: 0, tier_arrival: 7, prior_wait: 0 });
        Snapshot { stream, now: 10, schedule, progress }
    }

    #[test]
    fn multitier_wait_components() {
        let stream = JobStream::new(
            2,
            vec![job(1, 0, &[3, 2], 50, 1.0), job(2, 7, &[6, 1], 50, 1.0), job(3, 7, &[1, 7], 50, 1.0)],
        )
        .unwrap();
        let snap = two_tier_snapshot(&stream);
        snap.validate().unwrap();
        // 4 prior + elapsed (10 - 8) + job 3's exec in tier 2
        assert_eq!(expected_multitier_wait(&snap, JobId(1), 1, ResidualMode::Include).unwrap(), 13);
        assert_eq!(expected_multitier_wait(&snap, JobId(2), 0, ResidualMode::Include).unwrap(), 3);
        assert!(matches!(
            expected_multitier_wait(&snap, JobId(2), 1, ResidualMode::Include),
            Err(ModelError::NotResident { .. })
        ));
    }

    #[test]
    fn multitier_wait_just_arrived_is_zero() {
        let stream = JobStream::new(1, vec![job(1, 5, &[4], 10, 1.0)]).unwrap();
        let mut schedule = Schedule::idle(1, 2);
        schedule.tiers[0].queues[1] = ids(&[1]);
        let snap = Snapshot::backlog(&stream, schedule, 5).unwrap();
        assert_eq!(expected_multitier_wait(&snap, JobId(1), 0, ResidualMode::Include).unwrap(), 0);
    }

    #[test]
    fn multitier_wait_with_elapsed_and_predecessor() {
        let stream = JobStream::new(1, vec![job(1, 0, &[6], 10, 1.0), job(2, 0, &[2], 10, 1.0)]).unwrap();
        let mut schedule = Schedule::idle(1, 1);
        schedule.tiers[0].queues[0] = ids(&[1, 2]);
        let snap = Snapshot::backlog(&stream, schedule, 3).unwrap();
        assert_eq!(expected_multitier_wait(&snap, JobId(2), 0, ResidualMode::Include).unwrap(), 9);
    }

    #[test]
    fn residual_switch() {
        let stream = JobStream::new(1, vec![job(1, 0, &[5], 10, 1.0), job(2, 0, &[3], 10, 1.0)]).unwrap();
        let mut schedule = Schedule::idle(1, 1);
        schedule.tiers[0].executing[0] = Some(InService { job: JobId(1), started: 0 });
        schedule.tiers[0].queues[0] = ids(&[2]);
        let snap = Snapshot::backlog(&stream, schedule, 3).unwrap();
        assert_eq!(remaining_wait(&snap, &snap.schedule, JobId(2), ResidualMode::Include).unwrap(), 2);
        assert_eq!(remaining_wait(&snap, &snap.schedule, JobId(2), ResidualMode::Ignore).unwrap(), 0);
    }

    #[test]
    fn response_time_requires_departure() {
        let j = job(1, 0, &[2, 3], 5, 1.0);
        let stream = JobStream::new(2, vec![j.clone()]).unwrap();
        let mut trace = TimingTrace::for_stream(&stream);
        assert_eq!(response_time(&trace, &j), Err(ModelError::Incomplete(JobId(1))));
        let t = trace.jobs.get_mut(&JobId(1)).unwrap();
        t.visits[0] = Visit { arrival: Some(0), start: Some(0), departure: Some(2), resource: Some(0) };
        t.visits[1] = Visit { arrival: Some(2), start: Some(2), departure: Some(5), resource: Some(0) };
        assert_eq!(response_time(&trace, &j).unwrap(), 5);
        assert_eq!(trace.get(JobId(1)).unwrap().total_wait(), Some(0));
    }

    #[test]
    fn reordering_check_catches_lost_jobs() {
        let mut a = Schedule::idle(1, 2);
        a.tiers[0].queues = vec![ids(&[1, 2]), ids(&[3])];
        let mut b = a.clone();
        b.tiers[0].queues = vec![ids(&[3, 2]), ids(&[1])];
        a.check_reordering(&b).unwrap();
        b.tiers[0].queues = vec![ids(&[3, 2]), ids(&[4])];
        assert!(a.check_reordering(&b).is_err());
        b.tiers[0].queues = vec![ids(&[3, 2]), ids(&[3])];
        assert!(matches!(a.check_reordering(&b), Err(ModelError::Duplicate { .. })));
    }
}
