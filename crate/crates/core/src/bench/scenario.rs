use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::BenchError;
use crate::ga::GaConfig;
use crate::penalty::{Objective, PenaltyParams};
use crate::simulator::{SimConfig, Topology};
use crate::strategy::StrategySpec;
use crate::workload::{ArrivalProcess, WorkloadConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// Each strategy plans once on a frozen backlog.
    #[default]
    Snapshot,
    /// Each strategy drives a full simulation of the stream; the FCFS run of
    /// the same stream is the initial reference.
    Stream,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    #[default]
    Csv,
    Jsonl,
}

impl std::str::FromStr for Format {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "csv" => Ok(Self::Csv),
            "jsonl" | "json-lines" => Ok(Self::Jsonl),
            _ => Err(format!("unknown format {s:?}, expected csv or jsonl")),
        }
    }
}

/// Inclusive range of waiting jobs in a snapshot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Backlog {
    pub min: usize,
    pub max: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Outputs {
    pub dir: PathBuf,
    pub format: Format,
}

impl Default for Outputs {
    fn default() -> Self {
        Self { dir: PathBuf::from("out"), format: Format::Csv }
    }
}

/// One experiment: a workload, a set of strategies and how often to repeat.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    #[serde(default)]
    pub mode: Mode,
    #[serde(default = "default_replications")]
    pub replications: usize,
    #[serde(default)]
    pub seed: u64,
    pub strategies: Vec<StrategySpec>,
    /// Objective measured in snapshot mode. In stream mode `waiting` reports
    /// realized weighted waiting and both SLA forms report realized weighted
    /// violation of the end-to-end deadline.
    #[serde(default = "default_metric")]
    pub metric: Objective,
    /// Snapshot size. With batch arrivals the backlog size is drawn from this
    /// range; with Poisson arrivals the FCFS run is frozen at the first epoch
    /// with at least `min` waiting jobs.
    #[serde(default)]
    pub backlog: Option<Backlog>,
    /// Keep the GA convergence series.
    #[serde(default)]
    pub convergence: bool,
    #[serde(default)]
    pub workload: WorkloadConfig,
    #[serde(default)]
    pub ga: GaConfig,
    #[serde(default)]
    pub penalty: PenaltyParams,
    #[serde(default)]
    pub sim: SimConfig,
    #[serde(default)]
    pub outputs: Outputs,
}

fn default_replications() -> usize {
    30
}

fn default_metric() -> Objective {
    Objective::Waiting
}

impl Scenario {
    pub fn from_toml(text: &str) -> Result<Self, BenchError> {
        let scenario: Self = toml::from_str(text).map_err(|e| BenchError::Scenario(e.to_string()))?;
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn load(path: &Path) -> Result<Self, BenchError> {
        let text = std::fs::read_to_string(path).map_err(|source| BenchError::Io { path: path.to_owned(), source })?;
        Self::from_toml(&text).map_err(|e| match e {
            BenchError::Scenario(m) => BenchError::Scenario(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario serializes")
    }

    pub fn topology(&self) -> Topology {
        Topology { tiers: self.workload.n_tiers, resources: self.workload.n_resources }
    }

    pub fn validate(&self) -> Result<(), BenchError> {
        let fail = |m: &str| Err(BenchError::Scenario(m.to_string()));
        if self.strategies.is_empty() {
            return fail("at least one strategy is required");
        }
        if self.replications == 0 {
            return fail("replications must be at least 1");
        }
        self.workload.validate().map_err(|e| BenchError::Scenario(e.to_string()))?;
        self.ga.validate().map_err(|e| BenchError::Scenario(e.to_string()))?;
        self.penalty.validate().map_err(|e| BenchError::Scenario(e.to_string()))?;
        if let Some(b) = self.backlog {
            if b.min == 0 || b.min > b.max {
                return fail("backlog range must satisfy 1 <= min <= max");
            }
            if matches!(self.workload.arrival, ArrivalProcess::Poisson { .. }) && b.min > self.workload.n_jobs {
                return fail("backlog.min exceeds workload.n_jobs");
            }
        }
        Ok(())
    }

    /// Display labels, with `#2`, `#3`, ... appended to repeated strategies.
    pub fn labels(&self) -> Vec<String> {
        dedup_labels(self.strategies.iter().map(|s| s.to_string()))
    }
}

pub(crate) fn dedup_labels(names: impl IntoIterator<Item = String>) -> Vec<String> {
    let mut seen: Vec<String> = Vec::new();
    let mut out = Vec::new();
    for name in names {
        let n = seen.iter().filter(|s| **s == name).count();
        out.push(if n == 0 { name.clone() } else { format!("{name}#{}", n + 1) });
        seen.push(name);
    }
    out
}
