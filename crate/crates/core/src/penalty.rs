//! Penalty curves and scheduling objectives.
//!
//! The per-job penalty is the saturating exponential `ceiling * (1 - e^(-scale * c * x))`
//! where `c` is the job's cost coefficient and `x` its waiting or violation
//! time. The objectives that schedulers minimise are the linear weighted
//! sums; the exponential totals are reported alongside.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{
    cumulative_tier_allowance, remaining_wait, Job, JobId, JobStream, ModelError, ResidualMode, Schedule,
    Snapshot, TimingTrace, response_time,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PenaltyError {
    #[error("penalty parameter {name} must be positive and finite, got {value}")]
    BadParam { name: &'static str, value: f64 },
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// How negative violation times (early jobs) enter the SLA objectives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClampMode {
    /// Early jobs contribute zero.
    #[default]
    Clamped,
    /// Early jobs contribute their negative slack, as a literal signed sum.
    Signed,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PenaltyParams {
    /// Monetary cost factor; the per-job penalty saturates at this value.
    pub ceiling: f64,
    /// Scaling factor of the exponent.
    pub scale: f64,
    /// When false every job's cost coefficients are treated as 1.
    pub differentiated: bool,
    pub clamp: ClampMode,
    pub residual: ResidualMode,
}

impl Default for PenaltyParams {
    fn default() -> Self {
        Self {
            ceiling: 1.0,
            scale: 0.01 / 1000.0,
            differentiated: true,
            clamp: ClampMode::Clamped,
            residual: ResidualMode::Include,
        }
    }
}

impl PenaltyParams {
    pub fn validate(&self) -> Result<(), PenaltyError> {
        for (name, value) in [("ceiling", self.ceiling), ("scale", self.scale)] {
            if !(value.is_finite() && value > 0.0) {
                return Err(PenaltyError::BadParam { name, value });
            }
        }
        Ok(())
    }

    pub fn with_differentiation(self, differentiated: bool) -> Self {
        Self { differentiated, ..self }
    }

    pub fn service_weight(&self, job: &Job) -> f64 {
        if self.differentiated { job.service_cost } else { 1.0 }
    }

    pub fn violation_weight(&self, job: &Job) -> f64 {
        if self.differentiated { job.violation_cost } else { 1.0 }
    }

    /// Applies the clamp policy to a violation time.
    pub fn clamp(&self, overrun: f64) -> f64 {
        match self.clamp {
            ClampMode::Clamped => overrun.max(0.0),
            ClampMode::Signed => overrun,
        }
    }

    /// `ceiling * (1 - e^(-scale * x))`, computed without cancellation for small x.
    pub fn curve(&self, x: f64) -> f64 {
        -self.ceiling * (-self.scale * x).exp_m1()
    }
}

/// Waiting penalty of a job that waited `total_wait` over all tiers.
pub fn waiting_penalty(job: &Job, total_wait: u64, params: &PenaltyParams) -> f64 {
    params.curve(params.service_weight(job) * total_wait as f64)
}

/// SLA penalty of a job with violation time `overrun`; early completion
/// (`overrun <= 0`) costs nothing.
pub fn sla_penalty(job: &Job, overrun: i64, params: &PenaltyParams) -> f64 {
    params.curve(params.violation_weight(job) * overrun.max(0) as f64)
}

/// Penalty of an aggregate weighted total, the convention used for the
/// per-queue and per-tier penalty columns of reports.
pub fn aggregate_penalty(weighted_total: f64, params: &PenaltyParams) -> f64 {
    params.curve(weighted_total.max(0.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JobViolation {
    pub job: JobId,
    /// Response time minus deadline.
    pub overrun: i64,
    pub penalty: f64,
    pub satisfied: bool,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ViolationReport {
    pub jobs: Vec<JobViolation>,
}

impl ViolationReport {
    pub fn from_trace(stream: &JobStream, trace: &TimingTrace, params: &PenaltyParams) -> Result<Self, PenaltyError> {
        let jobs = stream
            .jobs()
            .iter()
            .map(|job| {
                let overrun = response_time(trace, job)? as i64 - job.deadline() as i64;
                Ok(JobViolation {
                    job: job.id,
                    overrun,
                    penalty: sla_penalty(job, overrun, params),
                    satisfied: overrun <= 0,
                })
            })
            .collect::<Result<_, ModelError>>()?;
        Ok(Self { jobs })
    }

    /// Sum of per-job penalties.
    pub fn total_penalty(&self) -> f64 {
        self.jobs.iter().map(|j| j.penalty).sum()
    }

    pub fn violated(&self) -> usize {
        self.jobs.iter().filter(|j| !j.satisfied).count()
    }
}

/// The three linear scheduling objectives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Objective {
    /// Weighted waiting time.
    Waiting,
    /// Weighted violation against the multi-tier allowance.
    #[serde(rename = "sla-al")]
    MultitierAllowance,
    /// Weighted violation against per-tier allowance shares.
    #[serde(rename = "sla-pt")]
    TierAllowance,
}

/// Contribution of one waiting job to an objective.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JobCost {
    pub job: JobId,
    pub tier: usize,
    pub queue: usize,
    pub cost: f64,
}

/// Per-job contributions to `objective` for every waiting job of
/// `schedule`, evaluated in the context of `snapshot`.
pub fn job_costs(
    objective: Objective,
    schedule: &Schedule,
    snapshot: &Snapshot<'_>,
    params: &PenaltyParams,
) -> Result<Vec<JobCost>, PenaltyError> {
    snapshot.schedule.check_reordering(schedule)?;
    let mut out = Vec::with_capacity(snapshot.progress.len());
    for (tier, state) in schedule.tiers.iter().enumerate() {
        for (queue, order) in state.queues.iter().enumerate() {
            for &id in order {
                let job = snapshot.stream.job(id)?;
                let progress = snapshot.progress.get(&id).ok_or(ModelError::NotResident { job: id, tier })?;
                let elapsed = snapshot.elapsed_wait(id)?;
                let remaining = remaining_wait(snapshot, schedule, id, params.residual)?;
                let tier_wait = (elapsed + remaining) as f64;
                let cost = match objective {
                    Objective::Waiting => params.service_weight(job) * tier_wait,
                    Objective::MultitierAllowance => {
                        let overrun = progress.prior_wait as f64 + tier_wait - job.allowance() as f64;
                        params.violation_weight(job) * params.clamp(overrun)
                    }
                    Objective::TierAllowance => {
                        // Completed tiers contribute realized wait minus their share,
                        // the current tier its expected wait minus its share.
                        let overrun = progress.prior_wait as f64 + tier_wait
                            - cumulative_tier_allowance(job, tier)?;
                        params.violation_weight(job) * params.clamp(overrun)
                    }
                };
                out.push(JobCost { job: id, tier, queue, cost });
            }
        }
    }
    Ok(out)
}

pub fn evaluate(
    objective: Objective,
    schedule: &Schedule,
    snapshot: &Snapshot<'_>,
    params: &PenaltyParams,
) -> Result<f64, PenaltyError> {
    Ok(job_costs(objective, schedule, snapshot, params)?.iter().map(|c| c.cost).sum())
}

/// Total weighted waiting under `schedule`.
pub fn objective_waiting(schedule: &Schedule, snapshot: &Snapshot<'_>, params: &PenaltyParams) -> Result<f64, PenaltyError> {
    evaluate(Objective::Waiting, schedule, snapshot, params)
}

/// Total weighted violation of the multi-tier allowance.
pub fn objective_multitier_allowance(
    schedule: &Schedule,
    snapshot: &Snapshot<'_>,
    params: &PenaltyParams,
) -> Result<f64, PenaltyError> {
    evaluate(Objective::MultitierAllowance, schedule, snapshot, params)
}

/// Total weighted violation of the per-tier allowance shares.
pub fn objective_tier_allowance(
    schedule: &Schedule,
    snapshot: &Snapshot<'_>,
    params: &PenaltyParams,
) -> Result<f64, PenaltyError> {
    evaluate(Objective::TierAllowance, schedule, snapshot, params)
}

/// Realized totals of a finished run.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RealizedTotals {
    /// Sum of weighted end-to-end waits.
    pub waiting: f64,
    /// Sum of weighted violation times (clamped per params).
    pub violation: f64,
    /// Sum of per-job exponential waiting penalties.
    pub waiting_penalty_total: f64,
    /// Sum of per-job exponential SLA penalties.
    pub violation_penalty_total: f64,
    pub violated_jobs: usize,
}

pub fn realized_totals(stream: &JobStream, trace: &TimingTrace, params: &PenaltyParams) -> Result<RealizedTotals, PenaltyError> {
    let mut totals = RealizedTotals::default();
    for job in stream.jobs() {
        let timing = trace.get(job.id).ok_or(ModelError::UnknownJob(job.id))?;
        let wait = timing.total_wait().ok_or(ModelError::Incomplete(job.id))?;
        let overrun = response_time(trace, job)? as i64 - job.deadline() as i64;
        totals.waiting += params.service_weight(job) * wait as f64;
        totals.violation += params.violation_weight(job) * params.clamp(overrun as f64);
        totals.waiting_penalty_total += waiting_penalty(job, wait, params);
        totals.violation_penalty_total += sla_penalty(job, overrun, params);
        totals.violated_jobs += usize::from(overrun > 0);
    }
    Ok(totals)
}

/// Weighted waiting realized in each tier.
pub fn realized_tier_waiting(stream: &JobStream, trace: &TimingTrace, params: &PenaltyParams) -> Result<Vec<f64>, PenaltyError> {
    let mut per_tier = vec![0.0; stream.n_tiers()];
    for job in stream.jobs() {
        let timing = trace.get(job.id).ok_or(ModelError::UnknownJob(job.id))?;
        for (j, visit) in timing.visits.iter().enumerate() {
            let wait = visit.waited().ok_or(ModelError::Incomplete(job.id))?;
            per_tier[j] += params.service_weight(job) * wait as f64;
        }
    }
    Ok(per_tier)
}
