//! Report files. CSV output is three tables in one directory, JSON lines is
//! a single file; both start with a version line, see `docs/formats.md`.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::report::{ConvergenceRow, Failure, Report, Row};
use super::scenario::Format;
use super::BenchError;

pub const REPORT_FORMAT: &str = "tiersched-report";
pub const REPORT_VERSION: u32 = 1;

pub const REPORT_CSV: &str = "report.csv";
pub const CONVERGENCE_CSV: &str = "convergence.csv";
pub const FAILURES_CSV: &str = "failures.csv";
pub const REPORT_JSONL: &str = "report.jsonl";

const ROW_COLUMNS: [&str; 11] = [
    "strategy",
    "replication",
    "seed",
    "entity",
    "count",
    "initial",
    "initial_penalty",
    "enhanced",
    "enhanced_penalty",
    "improvement_pct",
    "penalty_improvement_pct",
];
const CONVERGENCE_COLUMNS: [&str; 7] = ["strategy", "replication", "epoch", "unit", "generation", "best", "mean"];
const FAILURE_COLUMNS: [&str; 4] = ["strategy", "replication", "seed", "message"];

/// Writes `report` under `dir` and returns the files written.
pub fn emit(report: &Report, dir: &Path, format: Format) -> Result<Vec<PathBuf>, BenchError> {
    std::fs::create_dir_all(dir).map_err(|source| BenchError::Io { path: dir.to_owned(), source })?;
    match format {
        Format::Csv => {
            let files = [
                (dir.join(REPORT_CSV), Table::Rows),
                (dir.join(CONVERGENCE_CSV), Table::Convergence),
                (dir.join(FAILURES_CSV), Table::Failures),
            ];
            for (path, table) in &files {
                let out = create(path)?;
                write_csv(report, *table, out).map_err(|e| io_error(path, e))?;
            }
            Ok(files.into_iter().map(|(p, _)| p).collect())
        }
        Format::Jsonl => {
            let path = dir.join(REPORT_JSONL);
            write_jsonl(report, create(&path)?).map_err(|e| io_error(&path, e))?;
            Ok(vec![path])
        }
    }
}

/// Reads a report from a directory written by [`emit`], a `report.csv` (its
/// sibling tables are picked up when present) or a `.jsonl` file.
pub fn load_report(path: &Path) -> Result<Report, BenchError> {
    let path = if path.is_dir() {
        let jsonl = path.join(REPORT_JSONL);
        if jsonl.exists() { jsonl } else { path.join(REPORT_CSV) }
    } else {
        path.to_owned()
    };
    if path.extension().is_some_and(|e| e == "jsonl") {
        return read_jsonl(open(&path)?).map_err(|e| e.at(&path));
    }
    let mut report = read_csv_rows(open(&path)?).map_err(|e| e.at(&path))?;
    let dir = path.parent().unwrap_or(Path::new("."));
    let conv = dir.join(CONVERGENCE_CSV);
    if conv.exists() {
        let (name, rows) = read_table::<ConvergenceRow, _>(open(&conv)?, "convergence").map_err(|e| e.at(&conv))?;
        check_same(&report.scenario, &name, &conv)?;
        report.convergence = rows;
    }
    let fail = dir.join(FAILURES_CSV);
    if fail.exists() {
        let (name, rows) = read_table::<Failure, _>(open(&fail)?, "failures").map_err(|e| e.at(&fail))?;
        check_same(&report.scenario, &name, &fail)?;
        report.failures = rows;
    }
    Ok(report)
}

fn check_same(expected: &str, got: &str, path: &Path) -> Result<(), BenchError> {
    if expected == got {
        Ok(())
    } else {
        Err(BenchError::Parse {
            path: path.to_owned(),
            message: format!("belongs to scenario {got:?}, not {expected:?}"),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Table {
    Rows,
    Convergence,
    Failures,
}

impl Table {
    fn name(self) -> &'static str {
        match self {
            Table::Rows => "rows",
            Table::Convergence => "convergence",
            Table::Failures => "failures",
        }
    }
}

fn version_line(scenario: &str, table: &str) -> String {
    format!("# {REPORT_FORMAT} v{REPORT_VERSION} table={table} scenario={scenario}")
}

/// Header-only when the table is empty.
pub fn write_csv<W: Write>(report: &Report, table: Table, mut out: W) -> std::io::Result<()> {
    writeln!(out, "{}", version_line(&report.scenario, table.name()))?;
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    match table {
        Table::Rows => {
            w.write_record(ROW_COLUMNS)?;
            report.rows.iter().try_for_each(|r| w.serialize(r))?;
        }
        Table::Convergence => {
            w.write_record(CONVERGENCE_COLUMNS)?;
            report.convergence.iter().try_for_each(|r| w.serialize(r))?;
        }
        Table::Failures => {
            w.write_record(FAILURE_COLUMNS)?;
            report.failures.iter().try_for_each(|r| w.serialize(r))?;
        }
    }
    w.flush()
}

/// The rows table alone; convergence and failures stay empty.
pub fn read_csv_rows<R: Read>(input: R) -> Result<Report, LineError> {
    let (scenario, rows) = read_table::<Row, _>(input, "rows")?;
    Ok(Report { scenario, rows, ..Default::default() })
}

fn read_table<T: DeserializeOwned, R: Read>(input: R, table: &str) -> Result<(String, Vec<T>), LineError> {
    let mut input = BufReader::new(input);
    let mut first = String::new();
    input.read_line(&mut first).map_err(|e| LineError::new(1, e.to_string()))?;
    let scenario = parse_version_line(first.trim_end_matches(['\r', '\n']), table).map_err(|m| LineError::new(1, m))?;
    let mut rdr = csv::Reader::from_reader(input);
    let mut rows = Vec::new();
    for (i, rec) in rdr.deserialize().enumerate() {
        rows.push(rec.map_err(|e| LineError::new(i + 3, e.to_string()))?);
    }
    Ok((scenario, rows))
}

fn parse_version_line(line: &str, table: &str) -> Result<String, String> {
    let expected = format!("# {REPORT_FORMAT} v{REPORT_VERSION} table={table} scenario=");
    line.strip_prefix(&expected)
        .map(str::to_string)
        .ok_or_else(|| format!("expected a line starting with {expected:?}"))
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    format: String,
    version: u32,
    scenario: String,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
enum Record {
    Row(Row),
    Convergence(ConvergenceRow),
    Failure(Failure),
}

pub fn write_jsonl<W: Write>(report: &Report, out: W) -> std::io::Result<()> {
    let mut out = BufWriter::new(out);
    let header = Header { format: REPORT_FORMAT.into(), version: REPORT_VERSION, scenario: report.scenario.clone() };
    serde_json::to_writer(&mut out, &header)?;
    out.write_all(b"\n")?;
    let records = report
        .rows
        .iter()
        .cloned()
        .map(Record::Row)
        .chain(report.convergence.iter().cloned().map(Record::Convergence))
        .chain(report.failures.iter().cloned().map(Record::Failure));
    for rec in records {
        serde_json::to_writer(&mut out, &rec)?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

pub fn read_jsonl<R: Read>(input: R) -> Result<Report, LineError> {
    let mut lines = BufReader::new(input).lines().enumerate();
    let (_, first) = lines.next().ok_or_else(|| LineError::new(1, "empty file".into()))?;
    let first = first.map_err(|e| LineError::new(1, e.to_string()))?;
    let header: Header = serde_json::from_str(&first).map_err(|e| LineError::new(1, e.to_string()))?;
    if header.format != REPORT_FORMAT || header.version != REPORT_VERSION {
        return Err(LineError::new(1, format!("unsupported format {} v{}", header.format, header.version)));
    }
    let mut report = Report { scenario: header.scenario, ..Default::default() };
    for (i, line) in lines {
        let line = line.map_err(|e| LineError::new(i + 1, e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str(&line).map_err(|e| LineError::new(i + 1, e.to_string()))? {
            Record::Row(r) => report.rows.push(r),
            Record::Convergence(c) => report.convergence.push(c),
            Record::Failure(f) => report.failures.push(f),
        }
    }
    Ok(report)
}

/// Parse error at a 1-based line, before the file name is known.
#[derive(Debug)]
pub struct LineError {
    pub line: usize,
    pub message: String,
}

impl LineError {
    fn new(line: usize, message: String) -> Self {
        Self { line, message }
    }

    fn at(self, path: &Path) -> BenchError {
        BenchError::Parse { path: path.to_owned(), message: format!("line {}: {}", self.line, self.message) }
    }
}

fn create(path: &Path) -> Result<File, BenchError> {
    File::create(path).map_err(|source| BenchError::Io { path: path.to_owned(), source })
}

fn open(path: &Path) -> Result<File, BenchError> {
    File::open(path).map_err(|source| BenchError::Io { path: path.to_owned(), source })
}

fn io_error(path: &Path, source: std::io::Error) -> BenchError {
    BenchError::Io { path: path.to_owned(), source }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[allow(clippy::approx_constant)]
    fn sample() -> Report {
        Report {
            scenario: "demo run".into(),
            rows: vec![
                Row::new("ga:tier:waiting", 0, 17, "total".into(), 25, (38203.0, 0.318), (21168.0, 0.191)),
                Row::new("wlc", 1, 18, "tier1/queue2".into(), 8, (0.1 + 0.2, 1e-300), (0.0, 0.0)),
            ],
            convergence: vec![ConvergenceRow {
                strategy: "ga:tier:waiting".into(),
                replication: 0,
                epoch: 0,
                unit: "tier1".into(),
                generation: 3,
                best: 1.0 / 3.0,
                mean: 2.5,
            }],
            failures: vec![Failure { strategy: "wrr".into(), replication: 2, seed: 5, message: "bad, \"quoted\"\nline".into() }],
        }
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let r = sample();
        emit(&r, dir.path(), Format::Csv).unwrap();
        assert_eq!(load_report(dir.path()).unwrap(), r);
        assert_eq!(load_report(&dir.path().join(REPORT_CSV)).unwrap(), r);
    }

    #[test]
    fn jsonl_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let r = sample();
        let files = emit(&r, dir.path(), Format::Jsonl).unwrap();
        assert_eq!(load_report(&files[0]).unwrap(), r);
    }

    #[test]
    fn empty_report_is_header_only() {
        let mut buf = Vec::new();
        write_csv(&Report { scenario: "e".into(), ..Default::default() }, Table::Rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 2);
        assert!(text.starts_with("# tiersched-report v1 table=rows scenario=e\nstrategy,replication,"));
        assert_eq!(read_csv_rows(text.as_bytes()).unwrap().rows, vec![]);
    }

    #[test]
    fn table1_improvement_column() {
        let r = &sample().rows[0];
        assert!((r.improvement_pct - 44.59).abs() < 0.01);
    }

    #[test]
    fn rejects_foreign_files() {
        assert!(read_csv_rows("strategy,replication\n".as_bytes()).is_err());
        assert!(read_jsonl("{\"format\":\"other\",\"version\":1,\"scenario\":\"x\"}\n".as_bytes()).is_err());
        let err = read_jsonl("{\"format\":\"tiersched-report\",\"version\":1,\"scenario\":\"x\"}\n{\"kind\":\"row\"}\n".as_bytes()).unwrap_err();
        assert_eq!(err.line, 2);
    }
}
