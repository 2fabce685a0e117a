//! Timed insert workloads against the trie map or the lock-based table.
//!
//! Exit codes: 0 success, 2 usage, 3 I/O, 4 a run failed validation.

use std::fs::File;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use lfht::tabling::Graph;
use lfht::Config;
use lfht_bench::{emit_csv, run_benchmark, BenchError, Distribution, Impl, Mode, WorkloadSpec};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Dist {
    Uniform,
    Collider,
}

#[derive(Debug, Parser)]
#[command(about = "Time concurrent check/insert workloads and write CSV")]
struct Args {
    /// Implementations to run, comma separated: lfht, lockbased.
    #[arg(long = "impl", value_delimiter = ',', default_value = "lfht")]
    implementation: Vec<Impl>,
    /// same-work, partitioned or path-demo.
    #[arg(long, default_value = "same-work")]
    mode: Mode,
    /// Thread counts, comma separated. 1 is always run as the baseline.
    #[arg(long, value_delimiter = ',', default_value = "1,2,4,8")]
    threads: Vec<usize>,
    #[arg(long, default_value_t = 100_000)]
    keys: usize,
    #[arg(long, value_enum, default_value = "uniform")]
    dist: Dist,
    /// Keys per collider group.
    #[arg(long, default_value_t = 64)]
    fan: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 3)]
    w: u32,
    #[arg(long, default_value_t = 3)]
    threshold: usize,
    #[arg(long, default_value_t = 5)]
    repeats: usize,
    /// CSV destination; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Graph file for path-demo: a `nodes N` line, then one `u v` edge per
    /// line. An 8x8 grid when absent.
    #[arg(long)]
    graph: Option<PathBuf>,
}

fn fail(code: u8, msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("bench: {msg}");
    ExitCode::from(code)
}

fn main() -> ExitCode {
    let args = Args::parse();

    let graph = match &args.graph {
        None => None,
        Some(path) => match std::fs::read_to_string(path) {
            Err(e) => return fail(3, format!("{}: {e}", path.display())),
            Ok(text) => match text.parse::<Graph>() {
                Ok(g) => Some(g),
                Err(e) => return fail(2, format!("{}: {e}", path.display())),
            },
        },
    };
    let mut out: Box<dyn Write> = match &args.out {
        None => Box::new(io::stdout().lock()),
        Some(path) => match File::create(path) {
            Ok(f) => Box::new(f),
            Err(e) => return fail(3, format!("{}: {e}", path.display())),
        },
    };

    let config = Config {
        w: args.w,
        threshold: args.threshold,
        ..Config::default()
    };
    let dist = match args.dist {
        Dist::Uniform => Distribution::Uniform,
        Dist::Collider => Distribution::Collider { fan: args.fan },
    };
    let mut results = Vec::new();
    for &implementation in &args.implementation {
        let spec = WorkloadSpec {
            keys: args.keys,
            dist,
            seed: args.seed,
            threads: args.threads.clone(),
            repeats: args.repeats,
            config,
            graph: graph.clone(),
            ..WorkloadSpec::new(implementation, args.mode)
        };
        match run_benchmark(&spec) {
            Ok(r) => {
                for c in &r.cells {
                    let ratio = match (r.overhead(c.threads), r.speedup(c.threads)) {
                        (Some(o), _) => format!("overhead {o:.3}"),
                        (_, Some(s)) => format!("speedup {s:.3}"),
                        _ => String::new(),
                    };
                    eprintln!(
                        "{} {} threads={} mean={:.4}s {ratio}",
                        r.implementation,
                        r.mode,
                        c.threads,
                        c.mean()
                    );
                }
                results.push(r);
            }
            Err(e @ BenchError::Usage(_)) => return fail(2, e),
            Err(e @ BenchError::Validation { .. }) => return fail(4, e),
        }
    }
    if let Err(e) = emit_csv(&results, &mut out).and_then(|()| Ok(out.flush()?)) {
        return fail(3, e);
    }
    ExitCode::SUCCESS
}
