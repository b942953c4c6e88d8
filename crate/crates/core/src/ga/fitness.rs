//! Fast positional fitness. Everything that does not depend on the gene
//! order is folded into a per-job constant once per epoch, so a fitness call
//! is one pass over the genes.

use super::{Chromosome, GaError};
use crate::model::{cumulative_tier_allowance, ModelError, Snapshot};
use crate::penalty::{ClampMode, Objective, PenaltyParams};

#[derive(Debug, Clone, Copy, Default)]
struct GeneTerm {
    exec: f64,
    weight: f64,
    /// Order-independent part of the job's term: elapsed wait, plus for the
    /// SLA objectives prior waits minus the allowance target.
    offset: f64,
}

/// Per-epoch constants for evaluating chromosomes of one template.
#[derive(Debug, Clone)]
pub struct FitnessContext {
    terms: Vec<GeneTerm>,
    residuals: Vec<f64>,
    ranges: Vec<std::ops::Range<usize>>,
    clamp: Option<ClampMode>,
}

impl FitnessContext {
    pub fn new(
        snapshot: &Snapshot<'_>,
        template: &Chromosome,
        objective: Objective,
        params: &PenaltyParams,
    ) -> Result<Self, GaError> {
        template.validate()?;
        let mut terms = vec![GeneTerm::default(); snapshot.stream.len()];
        let mut residuals = Vec::with_capacity(template.segments.len());
        for seg in &template.segments {
            residuals.push(snapshot.residual(seg.tier, seg.queue, params.residual) as f64);
            for &id in &template.genes[seg.range()] {
                let job = snapshot.stream.job(id)?;
                let progress = snapshot
                    .progress
                    .get(&id)
                    .filter(|p| p.tier == seg.tier)
                    .ok_or(ModelError::NotResident { job: id, tier: seg.tier })?;
                let elapsed = snapshot.elapsed_wait(id)? as f64;
                let (weight, offset) = match objective {
                    Objective::Waiting => (params.service_weight(job), elapsed),
                    Objective::MultitierAllowance => (
                        params.violation_weight(job),
                        progress.prior_wait as f64 + elapsed - job.allowance() as f64,
                    ),
                    Objective::TierAllowance => (
                        params.violation_weight(job),
                        progress.prior_wait as f64 + elapsed - cumulative_tier_allowance(job, seg.tier)?,
                    ),
                };
                terms[id.index()] = GeneTerm { exec: job.exec_times[seg.tier] as f64, weight, offset };
            }
        }
        let clamp = (objective != Objective::Waiting).then_some(params.clamp);
        Ok(Self { terms, residuals, ranges: template.segments.iter().map(|s| s.range()).collect(), clamp })
    }

    /// Objective value of `genes` laid out on the template's segments. Only
    /// jobs inside the chromosome contribute.
    pub fn cost(&self, genes: &[crate::model::JobId]) -> f64 {
        let mut total = 0.0;
        for (range, &residual) in self.ranges.iter().zip(&self.residuals) {
            let mut ahead = residual;
            for id in &genes[range.clone()] {
                let t = &self.terms[id.index()];
                let x = t.offset + ahead;
                let x = match self.clamp {
                    Some(ClampMode::Clamped) => x.max(0.0),
                    _ => x,
                };
                total += t.weight * x;
                ahead += t.exec;
            }
        }
        total
    }
}

/// Objective value of a chromosome, restricted to the jobs it holds.
pub fn fitness(
    chromosome: &Chromosome,
    snapshot: &Snapshot<'_>,
    objective: Objective,
    params: &PenaltyParams,
) -> Result<f64, GaError> {
    Ok(FitnessContext::new(snapshot, chromosome, objective, params)?.cost(&chromosome.genes))
}
