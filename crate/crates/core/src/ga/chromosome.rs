use serde::{Deserialize, Serialize};

use super::GaError;
use crate::model::{JobId, Schedule};

/// Which queues a chromosome spans.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scope {
    /// All queues of one tier, concatenated.
    Tier(usize),
    /// All queues of all tiers, tier by tier.
    System,
    /// A single physical queue: reorder only.
    Queue { tier: usize, queue: usize },
}

/// A contiguous run of genes that decodes onto one physical queue.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Segment {
    pub tier: usize,
    pub queue: usize,
    pub start: usize,
    pub len: usize,
}

impl Segment {
    pub fn range(&self) -> std::ops::Range<usize> {
        self.start..self.start + self.len
    }
}

/// A virtual queue: the concatenation of the waiting jobs of every queue in
/// scope, with fixed segment boundaries.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Chromosome {
    pub genes: Vec<JobId>,
    pub segments: Vec<Segment>,
    pub scope: Scope,
}

impl Chromosome {
    /// Concatenates the queues in scope, in (tier, queue) order. A job that
    /// is both queued and in service is rejected by schedule validation.
    pub fn encode(schedule: &Schedule, scope: Scope) -> Result<Self, GaError> {
        schedule.validate()?;
        let n_tiers = schedule.tiers.len();
        let check_tier = |tier: usize| {
            if tier < n_tiers {
                Ok(())
            } else {
                Err(GaError::Scope(format!("tier {} of {n_tiers}", tier + 1)))
            }
        };
        let queues: Vec<(usize, usize)> = match scope {
            Scope::Tier(tier) => {
                check_tier(tier)?;
                (0..schedule.tiers[tier].n_resources()).map(|k| (tier, k)).collect()
            }
            Scope::System => schedule
                .tiers
                .iter()
                .enumerate()
                .flat_map(|(j, t)| (0..t.n_resources()).map(move |k| (j, k)))
                .collect(),
            Scope::Queue { tier, queue } => {
                check_tier(tier)?;
                if queue >= schedule.tiers[tier].n_resources() {
                    return Err(GaError::Scope(format!("queue {} of tier {}", queue + 1, tier + 1)));
                }
                vec![(tier, queue)]
            }
        };
        let mut genes = Vec::new();
        let mut segments = Vec::with_capacity(queues.len());
        for (tier, queue) in queues {
            let order = &schedule.tiers[tier].queues[queue];
            segments.push(Segment { tier, queue, start: genes.len(), len: order.len() });
            genes.extend_from_slice(order);
        }
        Ok(Self { genes, segments, scope })
    }

    /// Writes each segment back onto its queue in a copy of `base`.
    pub fn decode(&self, base: &Schedule) -> Result<Schedule, GaError> {
        self.validate()?;
        let mut out = base.clone();
        for seg in &self.segments {
            let slot = out
                .tiers
                .get_mut(seg.tier)
                .and_then(|t| t.queues.get_mut(seg.queue))
                .ok_or_else(|| GaError::Scope(format!("segment for tier {} queue {}", seg.tier + 1, seg.queue + 1)))?;
            *slot = self.genes[seg.range()].to_vec();
        }
        base.check_reordering(&out)?;
        Ok(out)
    }

    /// Gene ranges that operators must not mix: one per tier. A job can
    /// change queue within its tier but never change tier.
    pub fn blocks(&self) -> Vec<std::ops::Range<usize>> {
        let mut out: Vec<(usize, std::ops::Range<usize>)> = Vec::new();
        for seg in &self.segments {
            match out.last_mut() {
                Some((tier, r)) if *tier == seg.tier => r.end = seg.start + seg.len,
                _ => out.push((seg.tier, seg.range())),
            }
        }
        out.into_iter().map(|(_, r)| r).filter(|r| !r.is_empty()).collect()
    }

    /// Genes must be distinct and segments must tile `0..len` in order.
    pub fn validate(&self) -> Result<(), GaError> {
        let mut next = 0;
        for seg in &self.segments {
            if seg.start != next {
                return Err(GaError::Boundaries);
            }
            next += seg.len;
        }
        if next != self.genes.len() {
            return Err(GaError::Boundaries);
        }
        let mut seen = std::collections::HashSet::with_capacity(self.genes.len());
        if let Some(&dup) = self.genes.iter().find(|g| !seen.insert(**g)) {
            return Err(GaError::NotPermutation(format!("{dup} appears twice")));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.genes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.genes.is_empty()
    }

    pub fn with_genes(&self, genes: Vec<JobId>) -> Self {
        Self { genes, segments: self.segments.clone(), scope: self.scope }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::InService;

    fn ids(v: &[u32]) -> Vec<JobId> {
        v.iter().map(|&i| JobId(i)).collect()
    }

    fn tier_schedule() -> Schedule {
        let mut s = Schedule::idle(1, 3);
        s.tiers[0].queues = vec![ids(&[3, 5]), ids(&[2]), ids(&[7, 1, 4])];
        s
    }

    #[test]
    fn encode_concatenates_queues() {
        let c = Chromosome::encode(&tier_schedule(), Scope::Tier(0)).unwrap();
        assert_eq!(c.genes, ids(&[3, 5, 2, 7, 1, 4]));
        let lens: Vec<usize> = c.segments.iter().map(|s| s.len).collect();
        assert_eq!(lens, vec![2, 1, 3]);
        assert_eq!(c.decode(&tier_schedule()).unwrap(), tier_schedule());
    }

    #[test]
    fn system_scope_goes_tier_then_queue() {
        let mut s = Schedule::idle(2, 2);
        s.tiers[0].queues = vec![ids(&[1]), ids(&[2, 3])];
        s.tiers[1].queues = vec![ids(&[]), ids(&[4])];
        let c = Chromosome::encode(&s, Scope::System).unwrap();
        assert_eq!(c.genes, ids(&[1, 2, 3, 4]));
        assert_eq!(c.blocks(), vec![0..3, 3..4]);
        assert_eq!(c.decode(&s).unwrap(), s);
    }

    #[test]
    fn empty_tier_gives_empty_chromosome() {
        let s = Schedule::idle(1, 2);
        let c = Chromosome::encode(&s, Scope::Tier(0)).unwrap();
        assert!(c.is_empty());
        assert!(c.segments.iter().all(|seg| seg.len == 0));
        assert!(c.blocks().is_empty());
    }

    #[test]
    fn swap_across_boundary_migrates() {
        let base = tier_schedule();
        let mut c = Chromosome::encode(&base, Scope::Tier(0)).unwrap();
        c.genes.swap(0, 2);
        let s = c.decode(&base).unwrap();
        assert_eq!(s.tiers[0].queues[0], ids(&[2, 5]));
        assert_eq!(s.tiers[0].queues[1], ids(&[3]));
    }

    #[test]
    fn reversed_segment_keeps_membership() {
        let base = tier_schedule();
        let mut c = Chromosome::encode(&base, Scope::Queue { tier: 0, queue: 2 }).unwrap();
        c.genes.reverse();
        let s = c.decode(&base).unwrap();
        assert_eq!(s.tiers[0].queues[2], ids(&[4, 1, 7]));
        assert_eq!(s.tiers[0].queues[0], base.tiers[0].queues[0]);
    }

    #[test]
    fn rejects_in_service_and_duplicates() {
        let mut s = tier_schedule();
        s.tiers[0].executing[1] = Some(InService { job: JobId(2), started: 0 });
        assert!(Chromosome::encode(&s, Scope::Tier(0)).is_err());

        let base = tier_schedule();
        let mut c = Chromosome::encode(&base, Scope::Tier(0)).unwrap();
        c.genes[1] = JobId(3);
        assert!(matches!(c.decode(&base), Err(GaError::NotPermutation(_))));
        let mut c = Chromosome::encode(&base, Scope::Tier(0)).unwrap();
        c.segments[1].len += 1;
        assert!(matches!(c.decode(&base), Err(GaError::Boundaries)));
    }
}
