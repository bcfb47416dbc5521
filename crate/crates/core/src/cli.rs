//! Command-line driver: `score`, `verify`, `schedule` and `bench`.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::dataset::{Dataset, Preprocess};
use crate::error::Error;
use crate::io::{read_dataset, write_table};
use crate::linalg::FactorMethod;
use crate::oracle::{oracle_fit, run_bench, Method};
use crate::parallel::{build_partition, parallel_sweep};
use crate::schedule::{
    family_count, greedy_len, greedy_swaps_with_limit, verify_coverage, CoverageTracker,
    DEFAULT_MAX_VARIABLES,
};
use crate::sweep::{sweep, walk, ScoreFn, ScoreTable, SweepOptions};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

/// Largest m for which `verify` runs the per-family oracle.
pub const VERIFY_ORACLE_MAX_M: usize = 10;

#[derive(Debug, Parser)]
#[command(
    name = "givens-sweep",
    version,
    about = "Exact regressions for every (child, parent-set) family"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compute the full score table of a CSV dataset.
    Score(ScoreArgs),
    /// Check schedule length, coverage and oracle agreement.
    Verify(VerifyArgs),
    /// Print the greedy swap schedule, one position per line.
    Schedule(ScheduleArgs),
    /// Compare the sweep with per-family baselines.
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScoreArg {
    Rss,
    Loglik,
    Bic,
}

impl From<ScoreArg> for ScoreFn {
    fn from(s: ScoreArg) -> Self {
        match s {
            ScoreArg::Rss => ScoreFn::Rss,
            ScoreArg::Loglik => ScoreFn::GaussianLoglik,
            ScoreArg::Bic => ScoreFn::Bic,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Qr,
    Cholesky,
}

impl From<MethodArg> for FactorMethod {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Qr => FactorMethod::Householder,
            MethodArg::Cholesky => FactorMethod::Cholesky,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct PrepArgs {
    /// Regress through the origin instead of centering columns.
    #[arg(long)]
    pub no_center: bool,
    /// Scale columns to unit standard deviation.
    #[arg(long)]
    pub scale: bool,
    #[arg(long, default_value_t = DEFAULT_MAX_VARIABLES)]
    pub max_m: usize,
    /// Required for --max-m above the default.
    #[arg(long)]
    pub allow_large_m: bool,
}

impl PrepArgs {
    fn preprocess(&self) -> Preprocess {
        Preprocess {
            center: !self.no_center,
            scale: self.scale,
        }
    }

    fn checked_max_m(&self) -> Result<usize, String> {
        if self.max_m > DEFAULT_MAX_VARIABLES && !self.allow_large_m {
            return Err(format!(
                "--max-m {} exceeds {DEFAULT_MAX_VARIABLES}; pass --allow-large-m to accept the cost",
                self.max_m
            ));
        }
        Ok(self.max_m)
    }
}

#[derive(Debug, Clone, Args)]
pub struct ScoreArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Defaults to stdout.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Power-of-two worker count.
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
    #[arg(long, value_enum, default_value_t = ScoreArg::Rss)]
    pub score: ScoreArg,
    #[arg(long, value_enum, default_value_t = MethodArg::Qr)]
    pub method: MethodArg,
    /// Skip the parentless baseline families.
    #[arg(long)]
    pub no_empty: bool,
    #[command(flatten)]
    pub prep: PrepArgs,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    /// Dataset to check; synthetic Gaussian data when absent.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long, default_value_t = 4)]
    pub m: usize,
    #[arg(long, default_value_t = 50)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Drop this many swaps from the end of the schedule.
    #[arg(long, hide = true, default_value_t = 0)]
    pub truncate: usize,
    #[command(flatten)]
    pub prep: PrepArgs,
}

#[derive(Debug, Clone, Args)]
pub struct ScheduleArgs {
    pub m: usize,
    #[arg(long, default_value_t = DEFAULT_MAX_VARIABLES)]
    pub max_m: usize,
    #[arg(long)]
    pub allow_large_m: bool,
}

#[derive(Debug, Clone, Args)]
pub struct BenchArgs {
    /// Inclusive range `lo..hi`, or a single value.
    #[arg(long, default_value = "2..10", value_parser = parse_range)]
    pub m: (usize, usize),
    #[arg(long, default_value_t = 100)]
    pub n: usize,
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "greedy,naive_qr,brute_cholesky,dca,clarke"
    )]
    pub methods: Vec<String>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

fn parse_range(s: &str) -> Result<(usize, usize), String> {
    let parse = |t: &str| t.trim().parse::<usize>().map_err(|e| format!("'{t}': {e}"));
    let (lo, hi) = match s.split_once("..") {
        Some((a, b)) => (parse(a)?, parse(b.trim_start_matches('='))?),
        None => {
            let v = parse(s)?;
            (v, v)
        }
    };
    if lo < 2 || hi < lo {
        return Err(format!("invalid range {lo}..{hi}"));
    }
    Ok((lo, hi))
}

/// Parses `std::env::args` and runs; returns the process exit code.
pub fn main() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    run(cli)
}

pub fn run(cli: Cli) -> i32 {
    match cli.command {
        Command::Score(args) => cmd_score(&args),
        Command::Verify(args) => cmd_verify(&args),
        Command::Schedule(args) => cmd_schedule(&args),
        Command::Bench(args) => cmd_bench(&args),
    }
}

fn usage(msg: impl std::fmt::Display) -> i32 {
    eprintln!("error: {msg}");
    EXIT_USAGE
}

fn failure(err: &Error, data: Option<&Dataset>) -> i32 {
    let name = |v: usize| data.map_or_else(|| v.to_string(), |d| d.name(v).to_string());
    match err {
        Error::RankDeficient { column } => {
            eprintln!(
                "error: variable '{}' is collinear with earlier columns",
                name(*column)
            );
        }
        Error::SingularPrefix { variables } => {
            let names: Vec<String> = variables.iter().map(|&v| name(v)).collect();
            eprintln!("error: singular predictor set {{{}}}", names.join(", "));
        }
        other => eprintln!("error: {other}"),
    }
    if err.is_numerical() {
        EXIT_NUMERICAL
    } else {
        EXIT_USAGE
    }
}

fn load(path: &PathBuf, prep: &PrepArgs) -> Result<Dataset, i32> {
    let file = File::open(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    let raw = read_dataset(BufReader::new(file))
        .map_err(|e| usage(format!("{}: {e}", path.display())))?;
    let max_m = prep.checked_max_m().map_err(usage)?;
    if raw.m() > max_m {
        return Err(usage(Error::LimitExceeded {
            m: raw.m(),
            limit: max_m,
        }));
    }
    if raw.m() < 2 {
        return Err(usage("need at least two variables"));
    }
    raw.preprocess(prep.preprocess()).map_err(usage)
}

fn open_output(path: &Option<PathBuf>) -> io::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout())),
    })
}

pub fn cmd_score(args: &ScoreArgs) -> i32 {
    let data = match load(&args.input, &args.prep) {
        Ok(d) => d,
        Err(code) => return code,
    };
    let opts = SweepOptions {
        score: args.score.into(),
        include_empty: !args.no_empty,
        method: args.method.into(),
        max_m: args.prep.max_m,
    };
    let start = Instant::now();
    let result = if args.workers == 1 {
        sweep(&data, &opts)
    } else {
        build_partition(data.m(), args.workers).and_then(|plan| parallel_sweep(&data, &plan, &opts))
    };
    let out = match result {
        Ok(out) => out,
        Err(e) => return failure(&e, Some(&data)),
    };
    let wall = start.elapsed();

    let written = open_output(&args.output)
        .map_err(|e| e.to_string())
        .and_then(|w| write_table(&out.table, data.names(), w).map_err(|e| e.to_string()));
    if let Err(e) = written {
        return usage(e);
    }
    eprintln!(
        "m={} n={} families={} rotation_flops={} wall={:.3}s",
        data.m(),
        data.n(),
        out.table.len(),
        out.ledger.rotation_flops,
        wall.as_secs_f64()
    );
    EXIT_OK
}

pub fn cmd_verify(args: &VerifyArgs) -> i32 {
    let data = match &args.input {
        Some(path) => match load(path, &args.prep) {
            Ok(d) => d,
            Err(code) => return code,
        },
        None => {
            let max_m = match args.prep.checked_max_m() {
                Ok(v) => v,
                Err(e) => return usage(e),
            };
            if args.m < 2 || args.m > max_m {
                return usage(Error::LimitExceeded {
                    m: args.m,
                    limit: max_m,
                });
            }
            match Dataset::synthetic(args.n, args.m, args.seed)
                .and_then(|d| d.preprocess(args.prep.preprocess()))
            {
                Ok(d) => d,
                Err(e) => return usage(e),
            }
        }
    };
    let m = data.m();
    let full = match greedy_swaps_with_limit(m, args.prep.max_m) {
        Ok(s) => s,
        Err(e) => return usage(e),
    };
    let schedule = full.truncated(full.len().saturating_sub(args.truncate));
    let mut ok = true;

    let expected_len = greedy_len(m);
    let len_ok = schedule.len() as u64 == expected_len;
    println!(
        "schedule length {} (expected {expected_len}): {}",
        schedule.len(),
        verdict(len_ok)
    );
    ok &= len_ok;

    let cov = verify_coverage(m, &schedule);
    println!(
        "coverage {}/{}: {}",
        cov.covered,
        cov.total,
        verdict(cov.complete)
    );
    ok &= cov.complete;

    if m > VERIFY_ORACLE_MAX_M {
        println!("oracle skipped (m > {VERIFY_ORACLE_MAX_M})");
    } else {
        match oracle_check(&data, &schedule) {
            Ok(None) => println!("oracle pass ({} families)", family_count(m)),
            Ok(Some(msg)) => {
                println!("oracle fail: {msg}");
                ok = false;
            }
            Err(e) => return failure(&e, Some(&data)),
        }
    }
    if ok {
        EXIT_OK
    } else {
        EXIT_VERIFY_FAILED
    }
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "pass"
    } else {
        "FAIL"
    }
}

/// Tolerances for sweep-vs-oracle agreement.
pub const ORACLE_RSS_RTOL: f64 = 1e-8;
pub const ORACLE_COEF_ATOL: f64 = 1e-6;

/// Returns a description of the first disagreeing or missing family.
fn oracle_check(
    data: &Dataset,
    schedule: &crate::schedule::SwapSchedule,
) -> crate::Result<Option<String>> {
    let m = data.m();
    let identity: Vec<usize> = (0..m).collect();
    let mut table = ScoreTable::new(m, data.n());
    walk(
        data,
        &identity,
        schedule,
        &SweepOptions::default(),
        |k, r| {
            table.insert(k, r);
        },
    )?;
    let describe = |key: crate::FamilyKey| {
        let parents: Vec<&str> = key.parent_ids().map(|p| data.name(p)).collect();
        format!("{} | {{{}}}", data.name(key.response), parents.join(", "))
    };
    for idx in 0..CoverageTracker::capacity_for(m) as usize {
        let key = CoverageTracker::key_at(m, idx);
        if key.parents == 0 {
            continue;
        }
        let Some(got) = table.get(key) else {
            return Ok(Some(format!("{} never solved", describe(key))));
        };
        let want = oracle_fit(data, key)?;
        let rss_ok = (got.rss - want.rss).abs() <= ORACLE_RSS_RTOL * want.rss.abs();
        let coef_ok = got
            .coefficients
            .iter()
            .zip(&want.coefficients)
            .all(|(a, b)| (a - b).abs() <= ORACLE_COEF_ATOL);
        if !rss_ok || !coef_ok {
            return Ok(Some(format!(
                "{}: rss {} vs oracle {}",
                describe(key),
                got.rss,
                want.rss
            )));
        }
    }
    Ok(None)
}

pub fn cmd_schedule(args: &ScheduleArgs) -> i32 {
    if args.max_m > DEFAULT_MAX_VARIABLES && !args.allow_large_m {
        return usage("--max-m above the default requires --allow-large-m");
    }
    let schedule = match greedy_swaps_with_limit(args.m, args.max_m) {
        Ok(s) => s,
        Err(e) => return usage(e),
    };
    let stdout = io::stdout();
    let mut out = BufWriter::new(stdout.lock());
    for i in schedule.iter() {
        if writeln!(out, "{i}").is_err() {
            return EXIT_USAGE;
        }
    }
    if out.flush().is_err() {
        return EXIT_USAGE;
    }
    EXIT_OK
}

pub fn cmd_bench(args: &BenchArgs) -> i32 {
    let methods: Vec<Method> = match args
        .methods
        .iter()
        .filter(|s| !s.is_empty())
        .map(|s| s.parse())
        .collect()
    {
        Ok(v) => v,
        Err(e) => return usage(e),
    };
    let (lo, hi) = args.m;
    if hi > DEFAULT_MAX_VARIABLES {
        return usage(Error::LimitExceeded {
            m: hi,
            limit: DEFAULT_MAX_VARIABLES,
        });
    }
    if args.n < hi {
        return usage(format!("--n {} is smaller than m = {hi}", args.n));
    }
    let report = match run_bench(lo..=hi, args.n, &methods, args.seed) {
        Ok(r) => r,
        Err(e) => return failure(&e, None),
    };
    let written = open_output(&args.output).and_then(|mut w| {
        w.write_all(report.to_csv().as_bytes())?;
        w.flush()
    });
    match written {
        Ok(()) => EXIT_OK,
        Err(e) => usage(e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges() {
        assert_eq!(parse_range("2..10").unwrap(), (2, 10));
        assert_eq!(parse_range("2..=4").unwrap(), (2, 4));
        assert_eq!(parse_range("5").unwrap(), (5, 5));
        assert!(parse_range("1..3").is_err());
        assert!(parse_range("6..3").is_err());
    }

    #[test]
    fn large_m_needs_acknowledgement() {
        let prep = PrepArgs {
            no_center: false,
            scale: false,
            max_m: 30,
            allow_large_m: false,
        };
        assert!(prep.checked_max_m().is_err());
        let prep = PrepArgs {
            allow_large_m: true,
            ..prep
        };
        assert_eq!(prep.checked_max_m().unwrap(), 30);
    }
}
