//! Permutation operators and roulette selection.

use std::collections::HashSet;

use rand::Rng;

use super::GaError;
use crate::model::JobId;

/// One-point order crossover: `a[..cut]`, then the remaining ids in the
/// relative order they have in `b`.
pub fn crossover(a: &[JobId], b: &[JobId], cut: usize) -> Result<Vec<JobId>, GaError> {
    if a.len() != b.len() {
        return Err(GaError::NotPermutation(format!("parents of length {} and {}", a.len(), b.len())));
    }
    if cut > a.len() {
        return Err(GaError::OutOfRange { position: cut, len: a.len() });
    }
    let ha: HashSet<JobId> = a.iter().copied().collect();
    if ha.len() != a.len() || b.iter().any(|g| !ha.contains(g)) {
        return Err(GaError::NotPermutation("parents hold different job sets".into()));
    }
    let prefix: HashSet<JobId> = a[..cut].iter().copied().collect();
    let mut child = a[..cut].to_vec();
    child.extend(b.iter().filter(|g| !prefix.contains(g)));
    Ok(child)
}

/// Removes the gene at `from` and reinserts it at `to`.
pub fn mutate_insert(genes: &[JobId], from: usize, to: usize) -> Result<Vec<JobId>, GaError> {
    for position in [from, to] {
        if position >= genes.len() {
            return Err(GaError::OutOfRange { position, len: genes.len() });
        }
    }
    let mut out = genes.to_vec();
    let g = out.remove(from);
    out.insert(to, g);
    Ok(out)
}

/// Roulette weights for a cost-minimising population: `max - f + eps`.
pub fn selection_weights(costs: &[f64]) -> Vec<f64> {
    let max = costs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let eps = 1e-9 * max.abs().max(1.0);
    costs.iter().map(|&f| max - f + eps).collect()
}

/// Spins the wheel once; falls back to a uniform pick if the weights are
/// degenerate.
pub fn select<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> usize {
    let total: f64 = weights.iter().sum();
    if weights.len() <= 1 {
        return 0;
    }
    if !(total.is_finite() && total > 0.0) {
        return rng.random_range(0..weights.len());
    }
    let mut spin = rng.random::<f64>() * total;
    for (i, w) in weights.iter().enumerate() {
        if spin < *w {
            return i;
        }
        spin -= w;
    }
    weights.len() - 1
}
