//! Reference dispatch policies: first-come-first-served, weighted least
//! connection and weighted round robin. All of them only append at the tail
//! of the chosen queue and never reorder.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::TierState;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BaselineKind {
    /// Least loaded by job count, ties rotated round-robin.
    Fcfs,
    /// Least (queued + in service) / weight, ties to the lowest queue.
    Wlc,
    /// Smooth weighted round robin.
    Wrr,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BaselineError {
    #[error("resource weights must be positive and finite")]
    BadWeight,
    #[error("a tier needs at least one resource")]
    NoResources,
}

/// Per-tier dispatcher state. WRR and the FCFS tie rotation keep a cursor, so
/// one dispatcher serves exactly one tier.
#[derive(Debug, Clone)]
pub struct Dispatcher {
    kind: BaselineKind,
    weights: Vec<f64>,
    cursor: usize,
    credit: Vec<f64>,
}

impl Dispatcher {
    pub fn new(kind: BaselineKind, n_resources: usize) -> Result<Self, BaselineError> {
        Self::weighted(kind, vec![1.0; n_resources])
    }

    pub fn weighted(kind: BaselineKind, weights: Vec<f64>) -> Result<Self, BaselineError> {
        if weights.is_empty() {
            return Err(BaselineError::NoResources);
        }
        if weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(BaselineError::BadWeight);
        }
        let n = weights.len();
        Ok(Self { kind, weights, cursor: 0, credit: vec![0.0; n] })
    }

    pub fn kind(&self) -> BaselineKind {
        self.kind
    }

    /// Queue index for the next job entering `tier`.
    pub fn assign(&mut self, tier: &TierState) -> usize {
        debug_assert_eq!(tier.n_resources(), self.weights.len());
        match self.kind {
            BaselineKind::Fcfs => {
                let n = tier.n_resources();
                let least = (0..n).map(|k| tier.load(k)).min().unwrap_or(0);
                let chosen = (0..n)
                    .map(|offset| (self.cursor + offset) % n)
                    .find(|&k| tier.load(k) == least)
                    .unwrap_or(0);
                self.cursor = (chosen + 1) % n;
                chosen
            }
            BaselineKind::Wlc => {
                let mut best = 0;
                for k in 1..tier.n_resources() {
                    // cross-multiplied to keep the comparison exact
                    if (tier.load(k) as f64) * self.weights[best] < (tier.load(best) as f64) * self.weights[k] {
                        best = k;
                    }
                }
                best
            }
            BaselineKind::Wrr => {
                let total: f64 = self.weights.iter().sum();
                for (c, w) in self.credit.iter_mut().zip(&self.weights) {
                    *c += w;
                }
                let mut best = 0;
                for k in 1..self.credit.len() {
                    if self.credit[k] > self.credit[best] {
                        best = k;
                    }
                }
                self.credit[best] -= total;
                best
            }
        }
    }
}

/// One-shot assignment with a fresh dispatcher.
pub fn assign(tier: &TierState, kind: BaselineKind) -> usize {
    Dispatcher::new(kind, tier.n_resources())
        .map(|mut d| d.assign(tier))
        .unwrap_or(0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{InService, JobId};

    fn with_loads(loads: &[usize]) -> TierState {
        let mut t = TierState::idle(loads.len());
        let mut next = 1;
        for (k, &n) in loads.iter().enumerate() {
            for _ in 0..n {
                t.queues[k].push(JobId(next));
                next += 1;
            }
        }
        t
    }

    #[test]
    fn wlc_prefers_lowest_id_among_ties() {
        assert_eq!(assign(&with_loads(&[2, 1, 1]), BaselineKind::Wlc), 1);
    }

    #[test]
    fn wlc_counts_the_job_in_service() {
        let mut t = with_loads(&[0, 0]);
        t.executing[0] = Some(InService { job: JobId(9), started: 0 });
        assert_eq!(assign(&t, BaselineKind::Wlc), 1);
    }

    #[test]
    fn wlc_respects_weights() {
        let t = with_loads(&[3, 2]);
        let mut d = Dispatcher::weighted(BaselineKind::Wlc, vec![3.0, 1.0]).unwrap();
        assert_eq!(d.assign(&t), 0);
    }

    #[test]
    fn wrr_cycles_with_equal_weights() {
        let t = with_loads(&[0, 0, 0]);
        let mut d = Dispatcher::new(BaselineKind::Wrr, 3).unwrap();
        let picks: Vec<usize> = (0..6).map(|_| d.assign(&t)).collect();
        assert_eq!(picks, vec![0, 1, 2, 0, 1, 2]);
    }

    #[test]
    fn wrr_follows_weights() {
        let t = with_loads(&[0, 0]);
        let mut d = Dispatcher::weighted(BaselineKind::Wrr, vec![2.0, 1.0]).unwrap();
        let picks: Vec<usize> = (0..6).map(|_| d.assign(&t)).collect();
        assert_eq!(picks.iter().filter(|&&k| k == 0).count(), 4);
    }

    #[test]
    fn fcfs_rotates_ties() {
        let mut t = with_loads(&[0, 0, 0]);
        let mut d = Dispatcher::new(BaselineKind::Fcfs, 3).unwrap();
        let mut picks = Vec::new();
        for i in 0..6 {
            let k = d.assign(&t);
            t.queues[k].push(JobId(100 + i));
            picks.push(k);
        }
        assert_eq!(picks, vec![0, 1, 2, 0, 1, 2]);
        t.queues[1].clear();
        assert_eq!(d.assign(&t), 1);
    }

    #[test]
    fn single_queue_always_first() {
        let t = with_loads(&[4]);
        for kind in [BaselineKind::Fcfs, BaselineKind::Wlc, BaselineKind::Wrr] {
            let mut d = Dispatcher::new(kind, 1).unwrap();
            for _ in 0..5 {
                assert_eq!(d.assign(&t), 0);
            }
        }
    }

    #[test]
    fn rejects_bad_weights() {
        assert_eq!(Dispatcher::weighted(BaselineKind::Wrr, vec![1.0, 0.0]).unwrap_err(), BaselineError::BadWeight);
        assert_eq!(Dispatcher::weighted(BaselineKind::Wlc, vec![]).unwrap_err(), BaselineError::NoResources);
    }
}
