//! Exhaustive search over every ordering the GA can reach, scored with the
//! reference objective on the decoded schedule.

use super::{Chromosome, GaError, Scope};
use crate::model::{JobId, Schedule, Snapshot};
use crate::penalty::{self, Objective, PenaltyParams};

/// Largest chromosome the enumeration accepts.
pub const BRUTE_FORCE_LIMIT: usize = 9;

#[derive(Debug, Clone)]
pub struct BruteForce {
    pub cost: f64,
    /// Every gene order whose cost is within a relative 1e-9 of the optimum.
    pub optima: Vec<Chromosome>,
    pub evaluated: usize,
}

impl BruteForce {
    pub fn schedules(&self, base: &Schedule) -> Result<Vec<Schedule>, GaError> {
        self.optima.iter().map(|c| c.decode(base)).collect()
    }

    pub fn is_optimal(&self, cost: f64) -> bool {
        cost <= self.cost + tolerance(self.cost)
    }
}

fn tolerance(cost: f64) -> f64 {
    1e-9 * cost.abs().max(1.0)
}

/// Enumerates all permutations inside each tier block of `scope` with the
/// segment lengths fixed.
pub fn brute_force_best(
    snapshot: &Snapshot<'_>,
    scope: Scope,
    objective: Objective,
    params: &PenaltyParams,
) -> Result<BruteForce, GaError> {
    let template = Chromosome::encode(&snapshot.schedule, scope)?;
    if template.len() > BRUTE_FORCE_LIMIT {
        return Err(GaError::TooLarge { jobs: template.len(), limit: BRUTE_FORCE_LIMIT });
    }
    let blocks = template.blocks();
    let mut genes = template.genes.clone();
    for b in &blocks {
        genes[b.clone()].sort();
    }

    let mut scored: Vec<(f64, Vec<JobId>)> = Vec::new();
    let mut best = f64::INFINITY;
    let mut evaluated = 0;
    loop {
        let schedule = template.with_genes(genes.clone()).decode(&snapshot.schedule)?;
        let cost = penalty::evaluate(objective, &schedule, snapshot, params)?;
        evaluated += 1;
        if cost <= best + tolerance(best) {
            best = best.min(cost);
            scored.push((cost, genes.clone()));
        }
        if !advance(&mut genes, &blocks) {
            break;
        }
    }
    let optima = scored
        .into_iter()
        .filter(|(c, _)| *c <= best + tolerance(best))
        .map(|(_, g)| template.with_genes(g))
        .collect();
    Ok(BruteForce { cost: best, optima, evaluated })
}

/// Odometer over the blocks: the last block turns fastest.
fn advance(genes: &mut [JobId], blocks: &[std::ops::Range<usize>]) -> bool {
    for b in blocks.iter().rev() {
        if next_permutation(&mut genes[b.clone()]) {
            return true;
        }
    }
    false
}

/// Lexicographic successor; on the last permutation, wraps to sorted and
/// returns false.
fn next_permutation<T: Ord>(v: &mut [T]) -> bool {
    if v.len() < 2 {
        return false;
    }
    let mut i = v.len() - 1;
    while i > 0 && v[i - 1] >= v[i] {
        i -= 1;
    }
    if i == 0 {
        v.reverse();
        return false;
    }
    let mut j = v.len() - 1;
    while v[j] <= v[i - 1] {
        j -= 1;
    }
    v.swap(i - 1, j);
    v[i..].reverse();
    true
}
