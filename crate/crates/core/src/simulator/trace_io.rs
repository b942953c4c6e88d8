//! CSV export of a realized timing trace, one row per (job, tier).

use std::io::Write;

use crate::model::{JobStream, TimingTrace};
use crate::penalty::{sla_penalty, waiting_penalty, PenaltyParams};

pub const TRACE_FORMAT: &str = "tiersched-trace";

/// Writes `# tiersched-trace v1` followed by a CSV table with columns
/// `job,tier,queue,arrival,start,departure,wait,response,overrun,waiting_penalty,sla_penalty`.
/// The last four are per job and repeat on each of its tier rows. Tiers and
/// queues are 1-based here; unfinished fields are left empty.
pub fn write_trace<W: Write>(out: W, stream: &JobStream, trace: &TimingTrace, params: &PenaltyParams) -> csv::Result<()> {
    let mut out = out;
    writeln!(out, "# {TRACE_FORMAT} v1")?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "job", "tier", "queue", "arrival", "start", "departure", "wait", "response", "overrun", "waiting_penalty", "sla_penalty",
    ])?;
    let opt = |v: Option<u64>| v.map(|x| x.to_string()).unwrap_or_default();
    for job in stream.jobs() {
        let Some(timing) = trace.get(job.id) else { continue };
        let response = timing.final_departure().map(|d| d - job.arrival);
        let overrun = response.map(|r| r as i64 - job.deadline() as i64);
        let job_waiting = timing.total_wait().filter(|_| response.is_some()).map(|t| waiting_penalty(job, t, params));
        let job_sla = overrun.map(|a| sla_penalty(job, a, params));
        let job_fields = [
            opt(response),
            overrun.map(|a| a.to_string()).unwrap_or_default(),
            job_waiting.map(|e| e.to_string()).unwrap_or_default(),
            job_sla.map(|e| e.to_string()).unwrap_or_default(),
        ];
        for (tier, v) in timing.visits.iter().enumerate() {
            w.write_record([
                job.id.0.to_string(),
                (tier + 1).to_string(),
                opt(v.resource.map(|k| k as u64 + 1)),
                opt(v.arrival),
                opt(v.start),
                opt(v.departure),
                opt(v.waited()),
                job_fields[0].clone(),
                job_fields[1].clone(),
                job_fields[2].clone(),
                job_fields[3].clone(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}
