//! Randomized job streams and their on-disk format.
//!
//! A stream file is JSON lines: one header record followed by one record per
//! job, see `docs/formats.md`.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Job, JobId, JobStream, ModelError, Time};

pub const STREAM_FORMAT: &str = "tiersched-stream";
pub const STREAM_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum WorkloadError {
    #[error("invalid workload config: {0}")]
    Config(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: {source}")]
    Invalid { line: usize, source: ModelError },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ArrivalProcess {
    /// Every job arrives at time 0.
    Batch,
    /// Exponential inter-arrival times with the given rate (jobs per time unit),
    /// rounded to whole time units.
    Poisson { rate: f64 },
}

/// How the cost spread parameter is read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpreadReading {
    /// `cost_spread` is a variance; the standard deviation is its square root.
    #[default]
    Variance,
    StdDev,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WorkloadConfig {
    pub n_tiers: usize,
    pub n_resources: usize,
    pub n_jobs: usize,
    pub seed: u64,
    pub arrival: ArrivalProcess,
    /// Inclusive bounds of the uniform integer execution time per tier.
    pub exec_lo: Time,
    pub exec_hi: Time,
    pub cost_mean: f64,
    pub cost_spread: f64,
    pub spread_reading: SpreadReading,
    /// Inclusive bounds of the uniform allowance multiplier: the allowance is
    /// this multiple of the job's total execution time.
    pub slack_lo: f64,
    pub slack_hi: f64,
}

impl Default for WorkloadConfig {
    fn default() -> Self {
        Self {
            n_tiers: 1,
            n_resources: 3,
            n_jobs: 25,
            seed: 0,
            arrival: ArrivalProcess::Batch,
            exec_lo: 50,
            exec_hi: 500,
            cost_mean: 1000.0,
            cost_spread: 25.0,
            spread_reading: SpreadReading::Variance,
            slack_lo: 0.1,
            slack_hi: 1.0,
        }
    }
}

impl WorkloadConfig {
    pub fn validate(&self) -> Result<(), WorkloadError> {
        let fail = |msg: &str| Err(WorkloadError::Config(msg.to_string()));
        if self.n_tiers == 0 || self.n_resources == 0 || self.n_jobs == 0 {
            return fail("n_tiers, n_resources and n_jobs must be at least 1");
        }
        if self.exec_lo == 0 || self.exec_lo > self.exec_hi {
            return fail("execution time bounds must satisfy 1 <= exec_lo <= exec_hi");
        }
        if !(self.cost_mean.is_finite() && self.cost_mean > 0.0) {
            return fail("cost_mean must be positive");
        }
        if !(self.cost_spread.is_finite() && self.cost_spread >= 0.0) {
            return fail("cost_spread must be non-negative");
        }
        if !(self.slack_lo.is_finite() && self.slack_hi.is_finite() && self.slack_lo > 0.0 && self.slack_lo <= self.slack_hi) {
            return fail("slack bounds must satisfy 0 < slack_lo <= slack_hi");
        }
        if let ArrivalProcess::Poisson { rate } = self.arrival {
            if !(rate.is_finite() && rate > 0.0) {
                return fail("poisson rate must be positive");
            }
        }
        Ok(())
    }

    pub fn cost_std_dev(&self) -> f64 {
        match self.spread_reading {
            SpreadReading::Variance => self.cost_spread.sqrt(),
            SpreadReading::StdDev => self.cost_spread,
        }
    }
}

/// Normal(mean, sd) restricted to positive values by resampling.
struct PositiveNormal(Normal<f64>);

impl PositiveNormal {
    fn new(mean: f64, sd: f64) -> Result<Self, WorkloadError> {
        Normal::new(mean, sd)
            .map(Self)
            .map_err(|e| WorkloadError::Config(format!("cost distribution: {e}")))
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        loop {
            let x = self.0.sample(rng);
            if x > 0.0 {
                return x;
            }
        }
    }
}

/// Draws a stream. The same config always yields the same stream.
pub fn generate_stream(config: &WorkloadConfig) -> Result<JobStream, WorkloadError> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let costs = PositiveNormal::new(config.cost_mean, config.cost_std_dev())?;
    let gaps = match config.arrival {
        ArrivalProcess::Batch => None,
        ArrivalProcess::Poisson { rate } => {
            Some(Exp::new(rate).map_err(|e| WorkloadError::Config(format!("arrival process: {e}")))?)
        }
    };

    let mut clock: Time = 0;
    let mut jobs = Vec::with_capacity(config.n_jobs);
    for i in 0..config.n_jobs {
        if let Some(gaps) = &gaps {
            clock += gaps.sample(&mut rng).round() as Time;
        }
        let exec_times: Vec<Time> = (0..config.n_tiers)
            .map(|_| rng.random_range(config.exec_lo..=config.exec_hi))
            .collect();
        let service_cost = costs.sample(&mut rng);
        let violation_cost = costs.sample(&mut rng);
        let slack = rng.random_range(config.slack_lo..=config.slack_hi);
        let total: Time = exec_times.iter().sum();
        let allowance = ((total as f64 * slack).round() as Time).max(1);
        jobs.push(Job {
            id: JobId(i as u32 + 1),
            arrival: clock,
            exec_times,
            target_completion: clock + total + allowance,
            service_cost,
            violation_cost,
        });
    }
    Ok(JobStream::new(config.n_tiers, jobs)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StreamHeader {
    pub format: String,
    pub version: u32,
    pub n_tiers: usize,
    #[serde(default)]
    pub config: Option<WorkloadConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct JobRecord {
    id: u32,
    arrival: Time,
    exec_times: Vec<Time>,
    deadline: Time,
    psi: f64,
    zeta: f64,
}

impl From<&Job> for JobRecord {
    fn from(job: &Job) -> Self {
        Self {
            id: job.id.0,
            arrival: job.arrival,
            exec_times: job.exec_times.clone(),
            deadline: job.deadline(),
            psi: job.service_cost,
            zeta: job.violation_cost,
        }
    }
}

impl From<JobRecord> for Job {
    fn from(r: JobRecord) -> Self {
        Job {
            id: JobId(r.id),
            arrival: r.arrival,
            exec_times: r.exec_times,
            target_completion: r.arrival + r.deadline,
            service_cost: r.psi,
            violation_cost: r.zeta,
        }
    }
}

pub fn write_stream<W: Write>(stream: &JobStream, config: Option<&WorkloadConfig>, mut out: W) -> std::io::Result<()> {
    let header = StreamHeader {
        format: STREAM_FORMAT.into(),
        version: STREAM_VERSION,
        n_tiers: stream.n_tiers(),
        config: config.cloned(),
    };
    serde_json::to_writer(&mut out, &header)?;
    writeln!(out)?;
    for job in stream.jobs() {
        serde_json::to_writer(&mut out, &JobRecord::from(job))?;
        writeln!(out)?;
    }
    out.flush()
}

pub fn read_stream<R: BufRead>(input: R) -> Result<(StreamHeader, JobStream), WorkloadError> {
    let mut header: Option<StreamHeader> = None;
    let mut jobs = Vec::new();
    let mut lines_of = Vec::new();
    for (index, line) in input.lines().enumerate() {
        let line_no = index + 1;
        let line = line.map_err(|e| WorkloadError::Parse { line: line_no, message: e.to_string() })?;
        if line.trim().is_empty() {
            continue;
        }
        let parse_err = |e: serde_json::Error| WorkloadError::Parse { line: line_no, message: e.to_string() };
        match &header {
            None => {
                let h: StreamHeader = serde_json::from_str(&line).map_err(parse_err)?;
                if h.format != STREAM_FORMAT || h.version != STREAM_VERSION {
                    return Err(WorkloadError::Parse {
                        line: line_no,
                        message: format!(
                            "unsupported stream format {:?} v{} (expected {STREAM_FORMAT} v{STREAM_VERSION})",
                            h.format, h.version
                        ),
                    });
                }
                header = Some(h);
            }
            Some(h) => {
                let record: JobRecord = serde_json::from_str(&line).map_err(parse_err)?;
                let job = Job::from(record);
                job.validate(h.n_tiers)
                    .map_err(|source| WorkloadError::Invalid { line: line_no, source })?;
                jobs.push(job);
                lines_of.push(line_no);
            }
        }
    }
    let header = header.ok_or(WorkloadError::Parse { line: 1, message: "missing header record".into() })?;
    let stream = JobStream::new(header.n_tiers, jobs).map_err(|source| {
        let line = match &source {
            ModelError::NonContiguousIds { position, .. } => lines_of[*position],
            ModelError::ArrivalOrder { job } => lines_of[job.index().min(lines_of.len() - 1)],
            _ => 1,
        };
        WorkloadError::Invalid { line, source }
    })?;
    Ok((header, stream))
}

pub fn save_stream(stream: &JobStream, config: Option<&WorkloadConfig>, path: &Path) -> Result<(), WorkloadError> {
    let io_err = |source| WorkloadError::Io { path: path.to_path_buf(), source };
    let file = File::create(path).map_err(io_err)?;
    write_stream(stream, config, BufWriter::new(file)).map_err(io_err)
}

pub fn load_stream(path: &Path) -> Result<(StreamHeader, JobStream), WorkloadError> {
    let file = File::open(path).map_err(|source| WorkloadError::Io { path: path.to_path_buf(), source })?;
    read_stream(BufReader::new(file))
}
