//! Command-line front end: `tatl check` and `tatl bench`.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::bench::{self, Family};
use crate::encoding::{check, CheckError, Config, Mode};
use crate::engine::{EngineError, Options, Stats};
use crate::logic::parse_queries;
use crate::model::parse_model;
use crate::oracle::region_model_check;

pub const SCHEMA: &str = "tatl-report/1";

pub const EXIT_OK: i32 = 0;
pub const EXIT_MISMATCH: i32 = 1;
pub const EXIT_PARSE: i32 = 2;
pub const EXIT_RESOURCE: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "tatl", version, about = "Model checking of timed ATL on timed multiplayer games")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Check every query of a query file against a model.
    Check(CheckArgs),
    /// Write a generated benchmark model and its query file.
    Bench(BenchArgs),
}

#[derive(Args, Debug, Clone)]
pub struct CheckArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub queries: PathBuf,
    #[arg(long, value_enum, default_value_t = EngineKind::Incl)]
    pub engine: EngineKind,
    /// Also compute definitely-unsatisfied states, enabling early negative answers.
    #[arg(long)]
    pub unsat: bool,
    /// Cross-check every verdict with the region-graph oracle (small models only).
    #[arg(long)]
    pub oracle: bool,
    #[arg(long)]
    pub stats: bool,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    /// Per-query wall-clock limit in seconds.
    #[arg(long)]
    pub timeout: Option<f64>,
    /// Per-query limit on generated vertices.
    #[arg(long)]
    pub max_vertices: Option<usize>,
}

#[derive(Args, Debug, Clone)]
pub struct BenchArgs {
    /// train-gate, standoff or phase-king.
    pub family: String,
    pub n: usize,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EngineKind {
    Equal,
    Incl,
    Expand,
}

impl From<EngineKind> for Mode {
    fn from(e: EngineKind) -> Mode {
        match e {
            EngineKind::Equal => Mode::Equal,
            EngineKind::Incl => Mode::Incl,
            EngineKind::Expand => Mode::Expand,
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Text,
    Json,
}

#[derive(Serialize, Clone, Copy, Debug, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Satisfied,
    NotSatisfied,
    Inconclusive,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Satisfied => "satisfied",
            Verdict::NotSatisfied => "not-satisfied",
            Verdict::Inconclusive => "inconclusive",
        }
    }

    fn of(b: bool) -> Verdict {
        if b {
            Verdict::Satisfied
        } else {
            Verdict::NotSatisfied
        }
    }
}

#[derive(Serialize, Clone, Debug)]
pub struct RunConfig {
    pub engine: EngineKind,
    pub unsat: bool,
    pub oracle: bool,
    pub stats: bool,
    pub timeout_s: Option<f64>,
    pub max_vertices: Option<usize>,
}

#[derive(Serialize, Clone, Debug)]
pub struct OracleReport {
    /// `None` when the model is outside the oracle's size limits.
    pub verdict: Option<Verdict>,
    pub agrees: Option<bool>,
    pub skipped: Option<String>,
}

#[derive(Serialize, Clone, Debug)]
pub struct QueryReport {
    pub name: String,
    pub formula: String,
    pub expected: Option<bool>,
    pub verdict: Verdict,
    /// `None` when no verdict is expected.
    pub matches: Option<bool>,
    /// Why the verdict is inconclusive.
    pub limit: Option<String>,
    pub time_ms: f64,
    pub stopped_early: bool,
    /// Present with `--stats`.
    pub stats: Option<Stats>,
    /// Process-wide peak resident set size after the query, in KiB.
    pub peak_rss_kib: Option<u64>,
    pub oracle: Option<OracleReport>,
}

#[derive(Serialize, Clone, Debug)]
pub struct Summary {
    pub queries: usize,
    pub mismatches: usize,
    pub inconclusive: usize,
    pub oracle_disagreements: usize,
    pub exit_code: i32,
}

#[derive(Serialize, Clone, Debug)]
pub struct RunReport {
    pub schema: &'static str,
    pub model: String,
    pub queries: String,
    pub config: RunConfig,
    pub results: Vec<QueryReport>,
    pub summary: Summary,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}: {msg}")]
    Parse { path: String, msg: String },
    #[error(transparent)]
    Bench(#[from] bench::BenchError),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io { .. } | CliError::Parse { .. } | CliError::Bench(_) => EXIT_PARSE,
        }
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.display().to_string(), source })
}

/// Peak resident set size of this process, from `/proc/self/status`.
pub fn peak_rss_kib() -> Option<u64> {
    let status = std::fs::read_to_string("/proc/self/status").ok()?;
    let line = status.lines().find(|l| l.starts_with("VmHWM:"))?;
    line.split_whitespace().nth(1)?.parse().ok()
}

pub fn run_check(args: &CheckArgs) -> Result<RunReport, CliError> {
    let model_text = read(&args.model)?;
    let query_text = read(&args.queries)?;
    let model = parse_model(&model_text)
        .map_err(|e| CliError::Parse { path: args.model.display().to_string(), msg: e.to_string() })?;
    let queries = parse_queries(&query_text, &model)
        .map_err(|e| CliError::Parse { path: args.queries.display().to_string(), msg: e.to_string() })?;
    let cfg = Config::new(args.engine.into(), args.unsat);
    let mut results = Vec::with_capacity(queries.len());
    for q in &queries {
        let f = q.core();
        let opts = Options {
            merge: false,
            deadline: args.timeout.map(|s| Instant::now() + Duration::from_secs_f64(s)),
            max_vertices: args.max_vertices,
        };
        let start = Instant::now();
        let outcome = check(&model, &f, cfg, &opts);
        let time_ms = start.elapsed().as_secs_f64() * 1e3;
        let (verdict, limit, stats, stopped_early) = match outcome {
            Ok(r) => (Verdict::of(r.verdict), None, Some(r.stats), r.stopped_early),
            Err(CheckError::Engine(EngineError::ResourceLimit(why))) => (Verdict::Inconclusive, Some(why), None, false),
            Err(CheckError::InitialInvariant) => {
                return Err(CliError::Parse {
                    path: args.model.display().to_string(),
                    msg: CheckError::InitialInvariant.to_string(),
                })
            }
            Err(CheckError::Engine(e)) => panic!("engine contract violated on `{}`: {e}", q.name),
        };
        let matches = q.expected.map(|e| verdict == Verdict::of(e));
        let oracle = args.oracle.then(|| match region_model_check(&model, &f) {
            Ok(o) => OracleReport {
                verdict: Some(Verdict::of(o.verdict)),
                agrees: (verdict != Verdict::Inconclusive).then(|| Verdict::of(o.verdict) == verdict),
                skipped: None,
            },
            Err(e) => OracleReport { verdict: None, agrees: None, skipped: Some(e.to_string()) },
        });
        results.push(QueryReport {
            name: q.name.clone(),
            formula: f.display(&model.players).to_string(),
            expected: q.expected,
            verdict,
            matches,
            limit,
            time_ms,
            stopped_early,
            stats: if args.stats { stats } else { None },
            peak_rss_kib: peak_rss_kib(),
            oracle,
        });
    }
    let mismatches = results.iter().filter(|r| r.matches == Some(false) && r.verdict != Verdict::Inconclusive).count();
    let inconclusive = results.iter().filter(|r| r.verdict == Verdict::Inconclusive).count();
    let oracle_disagreements =
        results.iter().filter(|r| r.oracle.as_ref().and_then(|o| o.agrees) == Some(false)).count();
    // A wrong answer outranks an unanswered one.
    let exit_code = if mismatches + oracle_disagreements > 0 {
        EXIT_MISMATCH
    } else if inconclusive > 0 {
        EXIT_RESOURCE
    } else {
        EXIT_OK
    };
    Ok(RunReport {
        schema: SCHEMA,
        model: args.model.display().to_string(),
        queries: args.queries.display().to_string(),
        config: RunConfig {
            engine: args.engine,
            unsat: args.unsat,
            oracle: args.oracle,
            stats: args.stats,
            timeout_s: args.timeout,
            max_vertices: args.max_vertices,
        },
        summary: Summary { queries: results.len(), mismatches, inconclusive, oracle_disagreements, exit_code },
        results,
    })
}

/// One line per query: `name verdict`, plus `time vertices merges` with stats.
pub fn render_text(r: &RunReport) -> String {
    let mut out = String::new();
    for q in &r.results {
        write!(out, "{} {}", q.name, q.verdict.as_str()).unwrap();
        if let Some(s) = &q.stats {
            write!(out, " {:.3}ms {} {}", q.time_ms, s.generated, s.merges).unwrap();
        }
        if q.matches == Some(false) && q.verdict != Verdict::Inconclusive {
            out += " MISMATCH";
        }
        if let Some(o) = &q.oracle {
            match (o.agrees, &o.skipped) {
                (Some(true), _) => out += " oracle=agree",
                (Some(false), _) => out += " oracle=DISAGREE",
                (None, Some(_)) => out += " oracle=skipped",
                (None, None) => out += " oracle=n/a",
            }
        }
        out.push('\n');
    }
    out
}

pub fn render_json(r: &RunReport) -> String {
    serde_json::to_string_pretty(r).expect("report serializes") + "\n"
}

/// Write `<family>-<n>.tmg` and `<family>-<n>.tatl` into `out`.
pub fn run_bench(args: &BenchArgs) -> Result<(PathBuf, PathBuf), CliError> {
    let family: Family = args.family.parse()?;
    let inst = bench::generate(family, args.n)?;
    let io = |path: &Path, source| CliError::Io { path: path.display().to_string(), source };
    std::fs::create_dir_all(&args.out).map_err(|e| io(&args.out, e))?;
    let stem = format!("{}-{}", family.name(), args.n);
    let model = args.out.join(format!("{stem}.tmg"));
    let queries = args.out.join(format!("{stem}.tatl"));
    std::fs::write(&model, &inst.model).map_err(|e| io(&model, e))?;
    std::fs::write(&queries, &inst.queries).map_err(|e| io(&queries, e))?;
    Ok((model, queries))
}

/// Run a parsed command line; returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    match cli.command {
        Command::Check(args) => match run_check(&args) {
            Ok(report) => {
                let text = match args.format {
                    Format::Text => render_text(&report),
                    Format::Json => render_json(&report),
                };
                print!("{text}");
                report.summary.exit_code
            }
            Err(e) => {
                eprintln!("tatl: {e}");
                e.exit_code()
            }
        },
        Command::Bench(args) => match run_bench(&args) {
            Ok((m, q)) => {
                println!("{}\n{}", m.display(), q.display());
                EXIT_OK
            }
            Err(e) => {
                eprintln!("tatl: {e}");
                e.exit_code()
            }
        },
    }
}
