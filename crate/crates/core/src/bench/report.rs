use serde::{Deserialize, Serialize};

/// Initial versus enhanced totals of one entity (the whole system, a tier or
/// a queue) for one strategy and replication.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub strategy: String,
    pub replication: usize,
    pub seed: u64,
    /// `total`, `tier<j>` or `tier<j>/queue<k>`, 1-based.
    pub entity: String,
    /// Jobs attributed to the entity under the enhanced schedule.
    pub count: usize,
    /// Linear weighted total (waiting or violation time times cost).
    pub initial: f64,
    /// Sum of the per-job exponential penalties.
    pub initial_penalty: f64,
    pub enhanced: f64,
    pub enhanced_penalty: f64,
    pub improvement_pct: f64,
    pub penalty_improvement_pct: f64,
}

impl Row {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        strategy: &str,
        replication: usize,
        seed: u64,
        entity: String,
        count: usize,
        initial: (f64, f64),
        enhanced: (f64, f64),
    ) -> Self {
        Self {
            strategy: strategy.to_string(),
            replication,
            seed,
            entity,
            count,
            initial: initial.0,
            initial_penalty: initial.1,
            enhanced: enhanced.0,
            enhanced_penalty: enhanced.1,
            improvement_pct: improvement_pct(initial.0, enhanced.0),
            penalty_improvement_pct: improvement_pct(initial.1, enhanced.1),
        }
    }
}

/// `(initial - enhanced) / initial * 100`, and 0 when the initial total is 0.
pub fn improvement_pct(initial: f64, enhanced: f64) -> f64 {
    if initial == 0.0 { 0.0 } else { (initial - enhanced) / initial * 100.0 }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub strategy: String,
    pub replication: usize,
    /// Rescheduling epoch in stream mode, 0 in snapshot mode.
    pub epoch: u64,
    pub unit: String,
    pub generation: usize,
    pub best: f64,
    pub mean: f64,
}

/// A cell that could not be completed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub strategy: String,
    pub replication: usize,
    pub seed: u64,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Report {
    pub scenario: String,
    pub rows: Vec<Row>,
    pub convergence: Vec<ConvergenceRow>,
    pub failures: Vec<Failure>,
}

impl Report {
    pub fn strategies(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for r in self.rows.iter().map(|r| &r.strategy).chain(self.failures.iter().map(|f| &f.strategy)) {
            if !out.contains(r) {
                out.push(r.clone());
            }
        }
        out
    }

    /// Rows of one entity for one strategy, in replication order.
    pub fn series<'a>(&'a self, strategy: &'a str, entity: &'a str) -> impl Iterator<Item = &'a Row> + 'a {
        self.rows.iter().filter(move |r| r.strategy == strategy && r.entity == entity)
    }
}
