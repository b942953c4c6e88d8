//! Scenario runs, reports and strategy comparison.

mod compare;
mod emit;
mod oracle;
mod report;
mod run;
mod scenario;

pub use compare::{
    check_order, compare_by, compare_strategies, sign_p_value, sign_test, Expectation, OrderCheck, RankTable, SignTest,
    StepCheck, StrategyStats, MIN_REPLICATIONS,
};
pub use emit::{
    emit, load_report, read_csv_rows, read_jsonl, write_csv, write_jsonl, LineError, Table, CONVERGENCE_CSV, FAILURES_CSV,
    REPORT_CSV, REPORT_FORMAT, REPORT_JSONL, REPORT_VERSION,
};
pub use oracle::{brute_force_check, replay_check, OracleCase, MIN_ORACLE_JOBS};
pub use report::{improvement_pct, ConvergenceRow, Failure, Report, Row};
pub use run::{fcfs_backlog, initial_snapshot, replication_seed, run_scenario, run_scenario_with, CellTrace, RunOutput};
pub use scenario::{Backlog, Format, Mode, Outputs, Scenario};

use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("invalid scenario: {0}")]
    Scenario(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("cannot compare: {0}")]
    Compare(String),
    #[error(transparent)]
    Workload(#[from] crate::workload::WorkloadError),
    #[error(transparent)]
    Model(#[from] crate::model::ModelError),
    #[error(transparent)]
    Penalty(#[from] crate::penalty::PenaltyError),
    #[error(transparent)]
    Ga(#[from] crate::ga::GaError),
    #[error(transparent)]
    Strategy(#[from] crate::strategy::StrategyError),
    #[error(transparent)]
    Sim(#[from] crate::simulator::SimError),
    #[error(transparent)]
    Oracle(#[from] crate::simulator::OracleError),
}
