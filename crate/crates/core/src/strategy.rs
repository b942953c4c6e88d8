//! Named scheduling strategies and their simulator adapters.
//!
//! A strategy string is `fcfs`, `wlc`, `wrr` or
//! `ga:<tier|system|segmented>:<waiting|sla-al|sla-pt>[:nodiff]`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::baselines::{BaselineError, BaselineKind, Dispatcher};
use crate::ga::{self, GaConfig, GaError, GenerationStats, Scope};
use crate::model::{Job, Schedule, Snapshot, TierState};
use crate::penalty::{Objective, PenaltyParams};
use crate::simulator::{Scheduler, Topology};
use crate::splitmix;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StrategyError {
    #[error("unknown strategy {0:?}")]
    Parse(String),
    #[error(transparent)]
    Ga(#[from] GaError),
    #[error(transparent)]
    Baseline(#[from] BaselineError),
}

/// How a GA strategy carves the waiting jobs into chromosomes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GaScope {
    /// One virtual queue per tier.
    Tier,
    /// One virtual queue over every tier.
    System,
    /// One reorder-only chromosome per physical queue.
    Segmented,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StrategySpec {
    Baseline(BaselineKind),
    Ga { scope: GaScope, fitness: Objective, differentiated: bool },
}

impl StrategySpec {
    pub fn is_ga(&self) -> bool {
        matches!(self, StrategySpec::Ga { .. })
    }
}

impl FromStr for StrategySpec {
    type Err = StrategyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || StrategyError::Parse(s.to_string());
        let parts: Vec<&str> = s.trim().split(':').collect();
        match parts.as_slice() {
            ["fcfs"] => Ok(Self::Baseline(BaselineKind::Fcfs)),
            ["wlc"] => Ok(Self::Baseline(BaselineKind::Wlc)),
            ["wrr"] => Ok(Self::Baseline(BaselineKind::Wrr)),
            ["ga", scope, fitness, rest @ ..] => {
                let scope = match *scope {
                    "tier" => GaScope::Tier,
                    "system" => GaScope::System,
                    "segmented" => GaScope::Segmented,
                    _ => return Err(bad()),
                };
                let fitness = match *fitness {
                    "waiting" => Objective::Waiting,
                    "sla-al" => Objective::MultitierAllowance,
                    "sla-pt" => Objective::TierAllowance,
                    _ => return Err(bad()),
                };
                let differentiated = match rest {
                    [] => true,
                    ["nodiff"] => false,
                    _ => return Err(bad()),
                };
                Ok(Self::Ga { scope, fitness, differentiated })
            }
            _ => Err(bad()),
        }
    }
}

impl fmt::Display for StrategySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Baseline(BaselineKind::Fcfs) => f.write_str("fcfs"),
            Self::Baseline(BaselineKind::Wlc) => f.write_str("wlc"),
            Self::Baseline(BaselineKind::Wrr) => f.write_str("wrr"),
            Self::Ga { scope, fitness, differentiated } => {
                let scope = match scope {
                    GaScope::Tier => "tier",
                    GaScope::System => "system",
                    GaScope::Segmented => "segmented",
                };
                let fitness = match fitness {
                    Objective::Waiting => "waiting",
                    Objective::MultitierAllowance => "sla-al",
                    Objective::TierAllowance => "sla-pt",
                };
                write!(f, "ga:{scope}:{fitness}")?;
                if !differentiated {
                    f.write_str(":nodiff")?;
                }
                Ok(())
            }
        }
    }
}

impl Serialize for StrategySpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for StrategySpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Convergence series of one evolved chromosome.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitTrace {
    /// `system`, `tier<j>` or `tier<j>/queue<k>`, 1-based.
    pub unit: String,
    pub trace: Vec<GenerationStats>,
}

#[derive(Debug, Clone)]
pub struct Plan {
    pub schedule: Schedule,
    pub units: Vec<UnitTrace>,
}

/// The schedule a strategy would impose on a frozen state. FCFS keeps the
/// current schedule; WLC and WRR re-dispatch each tier's waiting jobs in id
/// order with fresh dispatchers; GA strategies evolve each unit of their
/// scope independently from the same snapshot.
pub fn plan(spec: StrategySpec, snapshot: &Snapshot<'_>, ga: &GaConfig, params: &PenaltyParams) -> Result<Plan, StrategyError> {
    match spec {
        StrategySpec::Baseline(BaselineKind::Fcfs) => Ok(Plan { schedule: snapshot.schedule.clone(), units: vec![] }),
        StrategySpec::Baseline(kind) => {
            let mut schedule = snapshot.schedule.clone();
            for tier in &mut schedule.tiers {
                let mut jobs: Vec<_> = tier.pending().collect();
                jobs.sort();
                tier.queues.iter_mut().for_each(Vec::clear);
                let mut d = Dispatcher::new(kind, tier.n_resources())?;
                for job in jobs {
                    let k = d.assign(tier);
                    tier.queues[k].push(job);
                }
            }
            Ok(Plan { schedule, units: vec![] })
        }
        StrategySpec::Ga { scope, fitness, differentiated } => {
            let config = GaConfig { fitness, differentiated, ..*ga };
            let s = &snapshot.schedule;
            let units: Vec<(Scope, String)> = match scope {
                GaScope::System => vec![(Scope::System, "system".into())],
                GaScope::Tier => (0..s.tiers.len()).map(|j| (Scope::Tier(j), format!("tier{}", j + 1))).collect(),
                GaScope::Segmented => s
                    .tiers
                    .iter()
                    .enumerate()
                    .flat_map(|(j, t)| {
                        (0..t.n_resources()).map(move |k| (Scope::Queue { tier: j, queue: k }, format!("tier{}/queue{}", j + 1, k + 1)))
                    })
                    .collect(),
            };
            let mut schedule = s.clone();
            let mut traces = Vec::new();
            for (i, (unit, name)) in units.into_iter().enumerate() {
                let size = match unit {
                    Scope::System => s.pending_count(),
                    Scope::Tier(j) => s.tiers[j].pending_count(),
                    Scope::Queue { tier, queue } => s.tiers[tier].queues[queue].len(),
                };
                if size < 2 {
                    continue;
                }
                let config = GaConfig { seed: splitmix(config.seed, i as u64), ..config };
                let evo = ga::evolve(snapshot, unit, &config, params)?;
                let genes = &evo.best.genes;
                for seg in &evo.best.segments {
                    schedule.tiers[seg.tier].queues[seg.queue] = genes[seg.range()].to_vec();
                }
                traces.push(UnitTrace { unit: name, trace: evo.trace });
            }
            s.check_reordering(&schedule).map_err(GaError::from)?;
            Ok(Plan { schedule, units: traces })
        }
    }
}

/// Dispatches with a baseline rule and never reorders.
pub struct BaselineScheduler {
    dispatchers: Vec<Dispatcher>,
}

impl BaselineScheduler {
    pub fn new(kind: BaselineKind, topology: Topology) -> Result<Self, BaselineError> {
        let dispatchers = (0..topology.tiers).map(|_| Dispatcher::new(kind, topology.resources)).collect::<Result<_, _>>()?;
        Ok(Self { dispatchers })
    }
}

impl Scheduler for BaselineScheduler {
    fn route(&mut self, _job: &Job, tier: usize, state: &TierState) -> usize {
        self.dispatchers[tier].assign(state)
    }
}

/// Routes with the FCFS rule and evolves the waiting jobs at every epoch.
pub struct GaScheduler {
    spec: StrategySpec,
    ga: GaConfig,
    params: PenaltyParams,
    dispatchers: Vec<Dispatcher>,
    epoch: u64,
    /// When set, the convergence traces of every epoch are kept.
    pub record: bool,
    pub traces: Vec<(u64, UnitTrace)>,
    pub failure: Option<StrategyError>,
}

impl GaScheduler {
    pub fn new(spec: StrategySpec, topology: Topology, ga: GaConfig, params: PenaltyParams) -> Result<Self, StrategyError> {
        if !spec.is_ga() {
            return Err(StrategyError::Parse(format!("{spec} is not a GA strategy")));
        }
        ga.validate()?;
        let dispatchers =
            (0..topology.tiers).map(|_| Dispatcher::new(BaselineKind::Fcfs, topology.resources)).collect::<Result<_, _>>()?;
        Ok(Self { spec, ga, params, dispatchers, epoch: 0, record: false, traces: Vec::new(), failure: None })
    }
}

impl Scheduler for GaScheduler {
    fn route(&mut self, _job: &Job, tier: usize, state: &TierState) -> usize {
        self.dispatchers[tier].assign(state)
    }

    fn uses_epochs(&self) -> bool {
        true
    }

    fn reschedule(&mut self, snapshot: &Snapshot<'_>) -> Option<Schedule> {
        self.epoch += 1;
        if snapshot.schedule.pending_count() < 2 || self.failure.is_some() {
            return None;
        }
        let ga = GaConfig { seed: splitmix(self.ga.seed, self.epoch), ..self.ga };
        match plan(self.spec, snapshot, &ga, &self.params) {
            Ok(p) => {
                if self.record {
                    self.traces.extend(p.units.into_iter().map(|u| (self.epoch, u)));
                }
                Some(p.schedule)
            }
            Err(e) => {
                self.failure = Some(e);
                None
            }
        }
    }

    fn should_stop(&self) -> bool {
        self.failure.is_some()
    }
}

/// Simulator adapter for any strategy.
pub fn scheduler_for(
    spec: StrategySpec,
    topology: Topology,
    ga: GaConfig,
    params: PenaltyParams,
) -> Result<Box<dyn Scheduler + Send>, StrategyError> {
    Ok(match spec {
        StrategySpec::Baseline(kind) => Box::new(BaselineScheduler::new(kind, topology)?),
        StrategySpec::Ga { .. } => Box::new(GaScheduler::new(spec, topology, ga, params)?),
    })
}
