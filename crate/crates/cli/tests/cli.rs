use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn tiersched(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tiersched")).args(args).output().expect("spawn tiersched")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

const SMALL: &str = r#"
name = "small"
mode = "stream"
replications = 10
seed = 21
strategies = ["ga:tier:waiting", "wlc", "wrr"]

[workload]
n_tiers = 1
n_resources = 3
n_jobs = 40
arrival = { kind = "poisson", rate = 0.0105 }

[ga]
generations = 40
"#;

fn scenario(dir: &Path, text: &str) -> String {
    let path = dir.join("scenario.toml");
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn generate_is_seeded() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.jsonl");
    let b = dir.path().join("b.jsonl");
    let c = dir.path().join("c.jsonl");
    for (path, seed) in [(&a, "5"), (&b, "5"), (&c, "6")] {
        let out = tiersched(&["generate", "--seed", seed, "--jobs", "30", "--out", path.to_str().unwrap()]);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    }
    let a = fs::read(a).unwrap();
    assert_eq!(a, fs::read(b).unwrap());
    assert_ne!(a, fs::read(c).unwrap());
    // header plus one line per job
    assert_eq!(a.iter().filter(|&&b| b == b'\n').count(), 31);
}

#[test]
fn run_writes_report_and_ranks() {
    let dir = tempfile::tempdir().unwrap();
    let s = scenario(dir.path(), SMALL);
    let out_dir = dir.path().join("out");
    let out = tiersched(&["run", "--scenario", &s, "--out", out_dir.to_str().unwrap(), "--expect", "ga:tier:waiting < wrr"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    assert!(text.contains("rank"));
    assert!(text.contains("ok   ga:tier:waiting < wrr"));
    let report = fs::read_to_string(out_dir.join("report.csv")).unwrap();
    assert!(report.starts_with("# tiersched-report v1 table=rows scenario=small"));
    assert!(out_dir.join("convergence.csv").exists());
    assert!(out_dir.join("failures.csv").exists());
}

#[test]
fn unmet_expectation_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let s = scenario(dir.path(), SMALL);
    let out_dir = dir.path().join("out");
    let out = tiersched(&["run", "--scenario", &s, "--out", out_dir.to_str().unwrap(), "--expect", "wrr << ga:tier:waiting"]);
    assert_eq!(code(&out), 2);
    assert!(stdout(&out).contains("FAIL wrr << ga:tier:waiting"));
}

#[test]
fn compare_merges_reports() {
    let dir = tempfile::tempdir().unwrap();
    let s = scenario(dir.path(), SMALL);
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    assert_eq!(code(&tiersched(&["run", "--scenario", &s, "--out", a.to_str().unwrap(), "--format", "jsonl"])), 0);
    assert_eq!(code(&tiersched(&["run", "--scenario", &s, "--out", b.to_str().unwrap()])), 0);

    let out = tiersched(&["compare", a.join("report.jsonl").to_str().unwrap(), b.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    assert!(text.contains("wlc#2"));
    // identical reruns tie
    assert!(text.contains("wlc < wlc#2: 0 wins, 0 losses, 10 ties"));

    let out = tiersched(&["compare", b.to_str().unwrap(), "--entity", "tier1/queue1"]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).contains("entity tier1/queue1"));
}

#[test]
fn snapshot_run_with_fcfs_only_changes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let s = scenario(
        dir.path(),
        r#"
name = "fcfs"
replications = 3
seed = 2
strategies = ["fcfs"]
[backlog]
min = 5
max = 10
"#,
    );
    let out_dir = dir.path().join("out");
    let out = tiersched(&["run", "--scenario", &s, "--out", out_dir.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let line = stdout(&out).lines().find(|l| l.starts_with("fcfs")).unwrap().to_string();
    assert!(line.trim_end().ends_with("0.00"), "{line}");
}

#[test]
fn oracle_modes() {
    let out = tiersched(&["oracle", "--instances", "4", "--max-jobs", "5", "--min-optimal", "0", "--max-gap", "1"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout(&out).contains("optimal in"));

    let dir = tempfile::tempdir().unwrap();
    let stream = dir.path().join("s.jsonl");
    let stream = stream.to_str().unwrap();
    assert_eq!(code(&tiersched(&["generate", "--seed", "3", "--jobs", "40", "--out", stream])), 0);
    for strategy in ["wrr", "ga:tier:waiting"] {
        let out = tiersched(&["oracle", "--stream", stream, "--strategy", strategy, "--generations", "20"]);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
        assert!(stdout(&out).contains("agree"));
    }
}

#[test]
fn usage_and_io_errors_exit_1() {
    assert_eq!(code(&tiersched(&["frobnicate"])), 1);
    assert_eq!(code(&tiersched(&["run"])), 1);
    assert_eq!(code(&tiersched(&["run", "--scenario", "/nonexistent/x.toml"])), 1);
    assert_eq!(code(&tiersched(&["run", "--scenario", "x.toml", "--format", "xml"])), 1);

    let dir = tempfile::tempdir().unwrap();
    let s = scenario(dir.path(), "name = \"x\"\nstrategies = [\"wlc\"]\nbogus = 1\n");
    let out = tiersched(&["run", "--scenario", &s]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("bogus"));

    assert_eq!(code(&tiersched(&["--help"])), 0);
}

#[test]
fn shipped_scenarios_load() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios");
    let mut seen = 0;
    for entry in fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            let s = tiersched::bench::Scenario::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            s.validate().unwrap();
            seen += 1;
        }
    }
    assert_eq!(seen, 3);
}
