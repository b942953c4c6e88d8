//! Penalty-aware scheduling for serial multi-tier clusters.
//!
//! Jobs pass through `N` tiers of identical resources, one queue per
//! resource. Schedulers decide which queue a job joins and, at rescheduling
//! epochs, how waiting jobs are ordered (and migrated within a tier). The
//! genetic schedulers minimise weighted waiting or SLA violation costs over
//! virtual queues; weighted least connection and weighted round robin serve
//! as reference dispatchers.
//!
//! * [`model`]: jobs, queues, schedules and timing arithmetic
//! * [`penalty`]: penalty curves and objectives
//! * [`workload`]: seeded stream generation and the stream file format
//! * [`simulator`]: discrete-event simulation and its replay oracle
//! * [`ga`]: chromosomes, operators, evolution and a brute-force oracle
//! * [`baselines`]: FCFS, WLC and WRR dispatch
//! * [`strategy`]: strategy strings and simulator adapters
//! * [`bench`]: scenarios, reports and strategy comparison

pub mod baselines;
pub mod bench;
pub mod ga;
pub mod model;
pub mod penalty;
pub mod simulator;
pub mod strategy;
pub mod workload;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Model(#[from] model::ModelError),
    #[error(transparent)]
    Penalty(#[from] penalty::PenaltyError),
    #[error(transparent)]
    Workload(#[from] workload::WorkloadError),
    #[error(transparent)]
    Sim(#[from] simulator::SimError),
    #[error(transparent)]
    Oracle(#[from] simulator::OracleError),
    #[error(transparent)]
    Ga(#[from] ga::GaError),
    #[error(transparent)]
    Baseline(#[from] baselines::BaselineError),
    #[error(transparent)]
    Strategy(#[from] strategy::StrategyError),
    #[error(transparent)]
    Bench(#[from] bench::BenchError),
}

/// Derives an independent 64-bit seed from `seed` and a `salt`.
pub fn splitmix(seed: u64, salt: u64) -> u64 {
    let mut z = seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
