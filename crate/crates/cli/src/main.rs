//! `tiersched`: generate streams, run scenarios, compare reports and check
//! the GA against exhaustive search.
//!
//! Exit codes: 0 success, 2 a check or expectation failed, 1 usage or IO
//! error.

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use tiersched::bench::{self, Expectation, Format, RankTable, Report, Scenario};
use tiersched::ga::GaConfig;
use tiersched::penalty::PenaltyParams;
use tiersched::simulator::{write_trace, SimConfig, Topology};
use tiersched::strategy::StrategySpec;
use tiersched::workload::{load_stream, save_stream, WorkloadConfig};

#[derive(Parser)]
#[command(name = "tiersched", version, about = "Penalty-aware scheduling experiments for multi-tier queues")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a seeded job stream.
    Generate {
        /// Take the workload section of this scenario.
        #[arg(long)]
        scenario: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Override the number of jobs.
        #[arg(long)]
        jobs: Option<usize>,
        /// Stream file to write.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a scenario and write its report.
    Run {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        replications: Option<usize>,
        /// Report directory (defaults to the scenario's outputs.dir).
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        format: Option<Format>,
        /// Expected ordering, e.g. "ga:tier:waiting << wlc < wrr".
        #[arg(long)]
        expect: Option<String>,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        /// Write per-cell timing traces of stream runs into this directory.
        #[arg(long)]
        traces: Option<PathBuf>,
    },
    /// Rank the strategies of one or more reports.
    Compare {
        /// Report directories or files.
        #[arg(required = true)]
        reports: Vec<PathBuf>,
        #[arg(long)]
        expect: Option<String>,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        /// Entity to rank on.
        #[arg(long, default_value = "total")]
        entity: String,
    },
    /// Check the GA against exhaustive search, or a stream run against the
    /// replay oracle.
    Oracle {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        instances: usize,
        #[arg(long, default_value_t = 8)]
        max_jobs: usize,
        #[arg(long, default_value_t = 200)]
        generations: usize,
        /// Required share of instances solved exactly.
        #[arg(long, default_value_t = 0.9)]
        min_optimal: f64,
        /// Largest relative gap tolerated on any instance.
        #[arg(long, default_value_t = 0.05)]
        max_gap: f64,
        /// Replay this stream instead of running the exhaustive check.
        #[arg(long)]
        stream: Option<PathBuf>,
        #[arg(long, default_value = "ga:tier:waiting")]
        strategy: StrategySpec,
        #[arg(long, default_value_t = 3)]
        resources: usize,
    },
}

/// A run that completed but whose checks did not hold.
struct CheckFailed;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli.command) {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(CheckFailed)) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {}", describe(&e));
            ExitCode::from(1)
        }
    }
}

/// The error chain, skipping causes already spelled out by their parent.
fn describe(e: &anyhow::Error) -> String {
    let mut out = String::new();
    for cause in e.chain() {
        let text = cause.to_string();
        if !out.contains(&text) {
            if !out.is_empty() {
                out.push_str(": ");
            }
            out.push_str(&text);
        }
    }
    out
}

fn dispatch(command: Command) -> Result<Result<(), CheckFailed>> {
    match command {
        Command::Generate { scenario, seed, jobs, out } => generate(scenario, seed, jobs, &out).map(Ok),
        Command::Run { scenario, seed, replications, out, format, expect, alpha, traces } => {
            let mut s = Scenario::load(&scenario)?;
            if let Some(seed) = seed {
                s.seed = seed;
            }
            if let Some(n) = replications {
                s.replications = n;
            }
            if let Some(out) = out {
                s.outputs.dir = out;
            }
            if let Some(f) = format {
                s.outputs.format = f;
            }
            let expect = expect.map(|e| e.parse::<Expectation>()).transpose()?;
            run(&s, expect.as_ref(), alpha, traces.as_deref())
        }
        Command::Compare { reports, expect, alpha, entity } => {
            let expect = expect.map(|e| e.parse::<Expectation>()).transpose()?;
            let mut merged = Report::default();
            for path in &reports {
                merge(&mut merged, bench::load_report(path)?);
            }
            let table = bench::compare_by(&merged, &entity, |r| r.enhanced)?;
            print_table(&table);
            Ok(check_expectation(&table, expect.as_ref(), alpha)?)
        }
        Command::Oracle { seed, instances, max_jobs, generations, min_optimal, max_gap, stream, strategy, resources } => {
            let ga = GaConfig { generations, ..Default::default() };
            match stream {
                Some(path) => replay(&path, strategy, resources, &ga),
                None => exhaustive(seed, instances, max_jobs, &ga, min_optimal, max_gap),
            }
        }
    }
}

fn generate(scenario: Option<PathBuf>, seed: Option<u64>, jobs: Option<usize>, out: &Path) -> Result<()> {
    let mut config = match scenario {
        Some(p) => Scenario::load(&p)?.workload,
        None => WorkloadConfig::default(),
    };
    if let Some(seed) = seed {
        config.seed = seed;
    }
    if let Some(n) = jobs {
        config.n_jobs = n;
    }
    let stream = tiersched::workload::generate_stream(&config)?;
    save_stream(&stream, Some(&config), out)?;
    eprintln!("wrote {} jobs to {}", stream.len(), out.display());
    Ok(())
}

fn run(s: &Scenario, expect: Option<&Expectation>, alpha: f64, traces: Option<&Path>) -> Result<Result<(), CheckFailed>> {
    let out = bench::run_scenario_with(s, traces.is_some())?;
    let report = &out.report;
    for path in bench::emit(report, &s.outputs.dir, s.outputs.format)? {
        eprintln!("wrote {}", path.display());
    }
    if let Some(dir) = traces {
        write_traces(dir, &out, &s.penalty)?;
    }
    let mut ok = true;
    for f in &report.failures {
        eprintln!("cell failed: {} replication {}: {}", f.strategy, f.replication, f.message);
        ok = false;
    }
    // a GA planning on a snapshot starts from the incumbent and keeps it
    for row in report.rows.iter().filter(|r| s.mode == bench::Mode::Snapshot && r.strategy.starts_with("ga:") && r.entity == "total") {
        if row.enhanced > row.initial + 1e-9 * row.initial.abs() {
            eprintln!("regression: {} replication {} went from {} to {}", row.strategy, row.replication, row.initial, row.enhanced);
            ok = false;
        }
    }
    print_summary(report);
    let labels = s.labels();
    let completed = report.series(&labels[0], "total").count();
    if labels.len() >= 2 && completed >= bench::MIN_REPLICATIONS {
        let table = bench::compare_strategies(report)?;
        print_table(&table);
        if check_expectation(&table, expect, alpha)?.is_err() {
            ok = false;
        }
    } else if expect.is_some() {
        bail!("--expect needs at least 2 strategies and {} replications", bench::MIN_REPLICATIONS);
    }
    Ok(if ok { Ok(()) } else { Err(CheckFailed) })
}

fn write_traces(dir: &Path, out: &bench::RunOutput, params: &PenaltyParams) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    for cell in &out.traces {
        let Some(stream) = out.streams.get(cell.replication).and_then(Option::as_ref) else { continue };
        let name = format!("{}-r{}.csv", cell.strategy.replace(':', "_").replace('#', "-"), cell.replication);
        let path = dir.join(name);
        let file = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
        write_trace(BufWriter::new(file), stream, &cell.trace, params).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

fn merge(into: &mut Report, mut other: Report) {
    if into.scenario.is_empty() {
        into.scenario = other.scenario.clone();
    } else {
        let taken = into.strategies();
        for name in other.strategies() {
            if taken.contains(&name) {
                let mut k = 2;
                while taken.contains(&format!("{name}#{k}")) {
                    k += 1;
                }
                let renamed = format!("{name}#{k}");
                other.rows.iter_mut().filter(|r| r.strategy == name).for_each(|r| r.strategy = renamed.clone());
                other.failures.iter_mut().filter(|r| r.strategy == name).for_each(|r| r.strategy = renamed.clone());
            }
        }
    }
    into.rows.extend(other.rows);
    into.failures.extend(other.failures);
}

fn print_summary(report: &Report) {
    println!("{:<32} {:>5} {:>16} {:>16} {:>9}", "strategy", "reps", "mean initial", "mean enhanced", "improv%");
    for name in report.strategies() {
        let rows: Vec<_> = report.series(&name, "total").collect();
        if rows.is_empty() {
            println!("{name:<32} {:>5}", 0);
            continue;
        }
        let n = rows.len() as f64;
        let init = rows.iter().map(|r| r.initial).sum::<f64>() / n;
        let enh = rows.iter().map(|r| r.enhanced).sum::<f64>() / n;
        let pct = rows.iter().map(|r| r.improvement_pct).sum::<f64>() / n;
        println!("{name:<32} {:>5} {init:>16.1} {enh:>16.1} {pct:>9.2}", rows.len());
    }
}

fn print_table(t: &RankTable) {
    println!();
    println!("rank  {:<32} {:>16}   ({} replications, entity {})", "strategy", "mean", t.replications.len(), t.entity);
    for s in &t.strategies {
        println!("{:>4}  {:<32} {:>16.1}", s.rank, s.strategy, s.mean);
    }
    println!();
    for w in t.strategies.windows(2) {
        let p = t.test(&w[0].strategy, &w[1].strategy).expect("ranked strategies");
        println!(
            "{} < {}: {} wins, {} losses, {} ties, p = {:.4}",
            p.better, p.worse, p.wins, p.losses, p.ties, p.p_value
        );
    }
}

fn check_expectation(t: &RankTable, expect: Option<&Expectation>, alpha: f64) -> Result<Result<(), CheckFailed>> {
    let Some(expect) = expect else { return Ok(Ok(())) };
    let check = bench::check_order(t, expect, alpha)?;
    println!();
    for s in &check.steps {
        println!(
            "{} {} {} {}: {:.1} vs {:.1}, p = {:.4}",
            if s.holds { "ok  " } else { "FAIL" },
            s.lower,
            if s.needs_significance { "<<" } else { "<" },
            s.upper,
            s.lower_mean,
            s.upper_mean,
            s.test.p_value
        );
    }
    Ok(if check.holds { Ok(()) } else { Err(CheckFailed) })
}

fn exhaustive(seed: u64, instances: usize, max_jobs: usize, ga: &GaConfig, min_optimal: f64, max_gap: f64) -> Result<Result<(), CheckFailed>> {
    if instances == 0 {
        bail!("--instances must be at least 1");
    }
    let cases = bench::brute_force_check(seed, instances, max_jobs, ga, &PenaltyParams::default())?;
    println!("{:>8} {:>5} {:>16} {:>16} {:>8}", "instance", "jobs", "optimum", "ga", "gap%");
    for c in &cases {
        println!("{:>8} {:>5} {:>16.1} {:>16.1} {:>8.3}{}", c.instance, c.jobs, c.optimum, c.found, c.gap * 100.0, if c.optimal { "" } else { " *" });
    }
    let optimal = cases.iter().filter(|c| c.optimal).count();
    let worst = cases.iter().map(|c| c.gap).fold(0.0, f64::max);
    println!("\noptimal in {optimal}/{instances}, worst gap {:.3}%", worst * 100.0);
    let ok = optimal as f64 >= min_optimal * instances as f64 && worst <= max_gap;
    Ok(if ok { Ok(()) } else { Err(CheckFailed) })
}

fn replay(path: &Path, strategy: StrategySpec, resources: usize, ga: &GaConfig) -> Result<Result<(), CheckFailed>> {
    let (_, stream) = load_stream(path)?;
    let topology = Topology { tiers: stream.n_tiers(), resources };
    match bench::replay_check(&stream, topology, strategy, ga, &PenaltyParams::default(), SimConfig::default())? {
        None => {
            println!("{} jobs under {strategy}: simulator and replay agree", stream.len());
            Ok(Ok(()))
        }
        Some(m) => {
            println!("mismatch: {m:?}");
            Ok(Err(CheckFailed))
        }
    }
}
