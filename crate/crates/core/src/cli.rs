//! Command-line front end.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::config::{OutputFormat, RunConfig};
use crate::corpus::{builtin_corpus, load_corpus, Corpus, TheoremRecord};
use crate::parallel::{par_map, Parallelism};
use crate::report::{analyze, exit_code, render_report, Stages, TheoremReport};

pub const EXIT_USAGE: i32 = 64;
pub const EXIT_DATA: i32 = 65;
pub const CORPUS_ENV: &str = "FLOORCHECK_CORPUS";

#[derive(Debug, Parser)]
#[command(name = "floorcheck", version, about = "Certify, falsify and cross-check floor/frac inequalities")]
struct Cli {
    #[command(flatten)]
    opts: Opts,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Opts {
    /// Highest branch index certified
    #[arg(long, global = true, value_name = "N")]
    n_max: Option<i64>,
    /// Width of the excluded slivers at each branch end
    #[arg(long, global = true)]
    epsilon: Option<f64>,
    /// Grid points per branch for the counterexample scan
    #[arg(long, global = true)]
    grid: Option<usize>,
    /// Maximum bisection depth
    #[arg(long, global = true)]
    depth: Option<u32>,
    #[arg(long, global = true)]
    min_width: Option<f64>,
    /// Relative falsification tolerance
    #[arg(long, global = true)]
    tol: Option<f64>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Derivation samples per statement
    #[arg(long, global = true)]
    samples: Option<usize>,
    #[arg(long, global = true, value_enum)]
    format: Option<OutputFormat>,
    /// Corpus file (default: $FLOORCHECK_CORPUS, else the built-in corpus)
    #[arg(long, global = true)]
    corpus: Option<PathBuf>,
    /// Worker threads (default: all cores)
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Debug, Args)]
struct Targets {
    /// Theorem ids such as T1
    ids: Vec<String>,
    #[arg(long)]
    all: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// List the corpus
    List,
    /// Falsify and certify
    Check(Targets),
    /// Search for counterexamples only
    Falsify(Targets),
    /// Check the base-inequality derivations only
    Derive(Targets),
    /// Run every analysis
    Report(Targets),
}

fn config(o: &Opts) -> RunConfig {
    let d = RunConfig::default();
    RunConfig {
        n_max: o.n_max.unwrap_or(d.n_max),
        epsilon: o.epsilon.unwrap_or(d.epsilon),
        grid_size: o.grid.unwrap_or(d.grid_size),
        max_depth: o.depth.unwrap_or(d.max_depth),
        min_width: o.min_width.unwrap_or(d.min_width),
        tol_f: o.tol.unwrap_or(d.tol_f),
        seed: o.seed.unwrap_or(d.seed),
        samples: o.samples.unwrap_or(d.samples),
        format: o.format.unwrap_or(d.format),
        parallelism: if o.threads == Some(1) {
            Parallelism::Sequential
        } else {
            d.parallelism
        },
        ..d
    }
}

fn corpus(o: &Opts) -> Result<Corpus, String> {
    let path = o
        .corpus
        .clone()
        .or_else(|| std::env::var_os(CORPUS_ENV).map(PathBuf::from));
    match path {
        Some(p) => load_corpus(&p).map_err(|e| format!("{}: {e}", p.display())),
        None => Ok(builtin_corpus().clone()),
    }
}

fn select<'a>(c: &'a Corpus, t: &Targets) -> Result<Vec<&'a TheoremRecord>, String> {
    if t.all {
        return Ok(c.theorems.iter().collect());
    }
    if t.ids.is_empty() {
        return Err("give theorem ids or --all".into());
    }
    t.ids
        .iter()
        .map(|id| {
            c.theorem(id).ok_or_else(|| {
                format!("unknown theorem id `{id}`; valid ids: {}", c.ids().join(", "))
            })
        })
        .collect()
}

fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> T {
    #[cfg(feature = "parallel")]
    if let Some(n) = threads.filter(|n| *n > 0) {
        if let Ok(pool) = rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            return pool.install(f);
        }
    }
    #[cfg(not(feature = "parallel"))]
    let _ = threads;
    f()
}

/// Runs the analyses for `records`, one report per record in input order.
pub fn run_reports(records: &[&TheoremRecord], c: &Corpus, cfg: &RunConfig, stages: Stages) -> Vec<TheoremReport> {
    par_map(records, cfg.parallelism, |r| analyze(r, &c.bases, cfg, stages))
}

/// Parses `args` (program name first), runs, and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { 0 };
        }
    };
    let mut cfg = config(&cli.opts);
    if let Err(e) = cfg.validate() {
        eprintln!("error: {e}");
        return EXIT_USAGE;
    }
    let c = match corpus(&cli.opts) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_DATA;
        }
    };
    let (targets, stages) = match &cli.command {
        Command::List => {
            let mut out = std::io::stdout().lock();
            for t in &c.theorems {
                let flag = if t.corrected.is_some() { "  [corrected]" } else { "" };
                let _ = writeln!(out, "{:<4} {}{flag}", t.id, t.as_printed);
            }
            return 0;
        }
        Command::Check(t) => (t, Stages::CHECK),
        Command::Falsify(t) => (t, Stages::FALSIFY),
        Command::Derive(t) => (t, Stages::DERIVE),
        Command::Report(t) => (t, Stages::ALL),
    };
    let records = match select(&c, targets) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };
    cfg.theorems = records.iter().map(|r| r.id.clone()).collect();
    let reports = with_threads(cli.opts.threads, || run_reports(&records, &c, &cfg, stages));
    let text = render_report(&reports, cfg.format);
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(text.as_bytes());
    let _ = out.flush();
    exit_code(&reports, stages)
}
