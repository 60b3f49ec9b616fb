//! Command-line frontend.
//!
//! Exit codes: 0 success, 1 disagreement or expectation mismatch, 2 numerical
//! failure, 3 configuration or I/O error.

use std::ffi::OsString;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};

use crate::config::load_config;
use crate::error::{Error, Result};
use crate::flow::write_trace_csv;
use crate::harness::{
    builtin, builtin_scenarios, property_sweep, run_scenario, trace_eigenphases, trace_eigenvalues, Scenario,
    ScenarioProblem, VerificationReport,
};
use crate::maslov::{maslov_index, maslov_index_block};
use crate::odebvp::{mas_bvp, sf_bvp};

pub const EXIT_OK: i32 = 0;
pub const EXIT_DISAGREE: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;
pub const EXIT_CONFIG: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "maslovflow", version, about = "Spectral flow and Maslov index verification")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run both pipelines and compare; targets are files, `@NAME` or `@all`.
    Verify {
        #[arg(required = true)]
        targets: Vec<String>,
        /// Directory for report JSON, batch summary and traces.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the spectral flow of the boundary-value family.
    Sf { target: String },
    /// Print the Maslov index of the graph path against the boundary condition.
    Maslov { target: String },
    /// Write a CSV trace of eigenvalues near 0 or of eigenphases.
    Trace {
        target: String,
        #[arg(long, value_enum)]
        what: TraceKind,
        /// Output file; standard output when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the seeded property suites.
    Sweep {
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = 50)]
        trials: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List the built-in scenarios.
    Scenarios,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum TraceKind {
    Eigenvalues,
    Eigenphases,
}

/// Pretty JSON with every float written to 17 significant digits.
pub struct PreciseFormatter(PrettyFormatter<'static>);

impl Default for PreciseFormatter {
    fn default() -> Self {
        PreciseFormatter(PrettyFormatter::new())
    }
}

impl Formatter for PreciseFormatter {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        write!(w, "{value:.16e}")
    }
    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }
    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }
    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }
    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }
    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }
    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }
    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }
    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }
    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

/// Serializes with [`PreciseFormatter`].
pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, PreciseFormatter::default());
    value.serialize(&mut ser).expect("in-memory serialization");
    String::from_utf8(buf).expect("JSON is UTF-8")
}

fn exit_code(e: &Error) -> i32 {
    if e.is_config() || matches!(e, Error::InvalidTrials) {
        EXIT_CONFIG
    } else {
        EXIT_NUMERICAL
    }
}

fn resolve(target: &str) -> Result<Vec<Scenario>> {
    match target.strip_prefix('@') {
        Some(name) if name.eq_ignore_ascii_case("all") => Ok(builtin_scenarios()),
        Some(name) => builtin(name).map(|s| vec![s]).ok_or_else(|| Error::Config(format!("no built-in scenario '{name}'"))),
        None => load_config(Path::new(target)).map(|s| vec![s]),
    }
}

fn single(target: &str) -> Result<Scenario> {
    let mut v = resolve(target)?;
    if v.len() != 1 {
        return Err(Error::Config("expected a single scenario".into()));
    }
    Ok(v.remove(0))
}

fn write_file(path: &Path, contents: &[u8]) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn write_traces(dir: &Path, r: &VerificationReport) -> Result<()> {
    for (tag, rep) in [("eigenvalues", &r.crossings.sf), ("eigenphases", &r.crossings.mas)] {
        if let Some(rep) = rep {
            let mut buf = Vec::new();
            write_trace_csv(&rep.samples, &mut buf).map_err(|e| Error::Io(e.to_string()))?;
            write_file(&dir.join(format!("{}_{tag}.csv", r.name)), &buf)?;
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct BatchEntry<'a> {
    name: &'a str,
    sf: Option<i64>,
    mas: Option<i64>,
    agree: bool,
    expected_match: Option<bool>,
    wall_ms: f64,
    error: Option<&'a str>,
}

#[derive(Serialize)]
struct BatchSummary<'a> {
    scenarios: Vec<BatchEntry<'a>>,
    all_pass: bool,
}

fn verify(targets: &[String], out: Option<&Path>) -> i32 {
    let mut scenarios = Vec::new();
    for t in targets {
        match resolve(t) {
            Ok(v) => scenarios.extend(v),
            Err(e) => {
                eprintln!("error: {t}: {e}");
                return exit_code(&e);
            }
        }
    }
    let reports: Vec<VerificationReport> = scenarios.iter().map(run_scenario).collect();
    let mut code = EXIT_OK;
    for r in &reports {
        let show = |v: Option<i64>| v.map_or("-".to_string(), |k| k.to_string());
        println!(
            "{}: sf={} mas={} {}",
            r.name,
            show(r.sf),
            show(r.mas),
            if r.passed() { "agree" } else if r.error.is_some() { "error" } else { "MISMATCH" }
        );
        let c = match &r.error {
            Some(e) => {
                eprintln!("error: {}: {}", r.name, e.message);
                if e.config { EXIT_CONFIG } else { EXIT_NUMERICAL }
            }
            None if !r.passed() => {
                if !r.agree {
                    eprintln!("{}: pipelines disagree", r.name);
                } else {
                    eprintln!("{}: result differs from expected values", r.name);
                }
                EXIT_DISAGREE
            }
            None => EXIT_OK,
        };
        code = code.max(c);
    }
    if let Some(dir) = out {
        let written = (|| -> Result<()> {
            std::fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
            for r in &reports {
                write_file(&dir.join(format!("{}.json", r.name)), to_json(r).as_bytes())?;
                write_traces(dir, r)?;
            }
            let summary = BatchSummary {
                scenarios: reports
                    .iter()
                    .map(|r| BatchEntry {
                        name: &r.name,
                        sf: r.sf,
                        mas: r.mas,
                        agree: r.agree,
                        expected_match: r.expected_match,
                        wall_ms: r.wall_ms,
                        error: r.error.as_ref().map(|e| e.message.as_str()),
                    })
                    .collect(),
                all_pass: reports.iter().all(|r| r.passed()),
            };
            write_file(&dir.join("summary.json"), to_json(&summary).as_bytes())
        })();
        if let Err(e) = written {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    }
    code
}

fn index(target: &str, spectral: bool) -> Result<i64> {
    let sc = single(target)?;
    match &sc.problem {
        ScenarioProblem::Bvp { family, boundary } => {
            if spectral {
                Ok(sf_bvp(family, boundary, &sc.opts)?.0)
            } else {
                Ok(mas_bvp(family, boundary, &sc.opts)?.0)
            }
        }
        ScenarioProblem::Pair(path) => {
            if spectral {
                maslov_index_block(path, &sc.opts.flow)
            } else {
                Ok(maslov_index(path, &sc.opts.flow)?.0)
            }
        }
    }
}

fn trace(target: &str, what: TraceKind, out: Option<&Path>) -> Result<()> {
    let sc = single(target)?;
    let samples = match what {
        TraceKind::Eigenvalues => trace_eigenvalues(&sc)?,
        TraceKind::Eigenphases => trace_eigenphases(&sc)?,
    };
    let mut buf = Vec::new();
    write_trace_csv(&samples, &mut buf).map_err(|e| Error::Io(e.to_string()))?;
    match out {
        Some(p) => write_file(p, &buf),
        None => io::stdout().write_all(&buf).map_err(|e| Error::Io(e.to_string())),
    }
}

fn configure_threads() -> Result<()> {
    let Ok(v) = std::env::var("MASLOVFLOW_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::Config(format!("MASLOVFLOW_THREADS must be a positive integer, found '{v}'")))?;
    // A pool built earlier in the same process keeps its size.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

/// Parses `argv` (including the program name) and runs the command.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    if let Err(e) = configure_threads() {
        eprintln!("error: {e}");
        return EXIT_CONFIG;
    }
    let report = |r: Result<()>| match r {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    };
    match cli.command {
        Command::Verify { targets, out } => verify(&targets, out.as_deref()),
        Command::Sf { target } => report(index(&target, true).map(|k| println!("{k}"))),
        Command::Maslov { target } => report(index(&target, false).map(|k| println!("{k}"))),
        Command::Trace { target, what, out } => report(trace(&target, what, out.as_deref())),
        Command::Sweep { seed, trials, out } => match property_sweep(seed, trials) {
            Ok(summary) => {
                let json = to_json(&summary);
                let written = match &out {
                    Some(p) => write_file(p, json.as_bytes()),
                    None => {
                        println!("{json}");
                        Ok(())
                    }
                };
                match written {
                    Err(e) => report(Err(e)),
                    Ok(()) if summary.all_pass => EXIT_OK,
                    Ok(()) => {
                        eprintln!("property sweep has failures");
                        EXIT_DISAGREE
                    }
                }
            }
            Err(e) => report(Err(e)),
        },
        Command::Scenarios => {
            for sc in builtin_scenarios() {
                let exp = sc.expected.as_ref();
                let show = |v: Option<i64>| v.map_or("-".to_string(), |k| k.to_string());
                println!(
                    "@{}\t{:?}\tsf={} mas={}\t{}",
                    sc.name,
                    sc.kind,
                    show(exp.and_then(|e| e.sf)),
                    show(exp.and_then(|e| e.mas)),
                    exp.map_or("", |e| e.provenance.as_str())
                );
            }
            EXIT_OK
        }
    }
}
