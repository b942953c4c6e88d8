//! Genetic search over virtual queues.
//!
//! A chromosome concatenates the waiting jobs of several physical queues;
//! its fixed segment boundaries map gene runs back onto queues, so moving a
//! gene across a boundary migrates the job and moving it within a segment
//! reorders it.

mod brute;
mod chromosome;
mod evolve;
mod fitness;
pub mod operators;

pub use brute::{brute_force_best, BruteForce, BRUTE_FORCE_LIMIT};
pub use chromosome::{Chromosome, Scope, Segment};
pub use evolve::{evolve, Evolution, GaConfig, GenerationStats};
pub use fitness::{fitness, FitnessContext};
pub use operators::{crossover, mutate_insert, select, selection_weights};

use thiserror::Error;

use crate::model::ModelError;
use crate::penalty::PenaltyError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GaError {
    #[error("not a permutation: {0}")]
    NotPermutation(String),
    #[error("segments do not tile the chromosome")]
    Boundaries,
    #[error("position {position} out of range for {len} genes")]
    OutOfRange { position: usize, len: usize },
    #[error("{jobs} jobs exceed the enumeration limit of {limit}")]
    TooLarge { jobs: usize, limit: usize },
    #[error("scope out of range: {0}")]
    Scope(String),
    #[error("invalid GA configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Penalty(#[from] PenaltyError),
}
