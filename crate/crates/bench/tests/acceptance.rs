//! Acceptance suite: one PASS/FAIL/SKIP line per criterion. Exits non-zero
//! if any criterion fails.

use std::collections::BTreeSet;
use std::fmt;
use std::process::ExitCode;
use std::thread;
use std::time::{Duration, Instant};

use lfht::tabling::{tabled_path, Graph, TableSpace};
use lfht::verify::conformance::{exactly, second_level_remap, third_level_remap, violation_fixtures};
use lfht::verify::{stress, Scenario, StressOutcome, StressParams, ValidationReport};
use lfht::Config;
use lfht_bench::{run_benchmark, Impl, Mode, WorkloadSpec};

enum Verdict {
    Pass,
    Fail,
    Skip,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
            Verdict::Skip => "SKIP",
        })
    }
}

fn verdict(ok: bool) -> Verdict {
    if ok {
        Verdict::Pass
    } else {
        Verdict::Fail
    }
}

/// Reports gathered along the way for the structural and write-bound
/// criteria.
#[derive(Default)]
struct Seen {
    reports: Vec<(String, ValidationReport)>,
}

impl Seen {
    fn outcome(&mut self, o: &StressOutcome) {
        let label = format!("{} t={} seed={}", o.scenario, o.params.threads, o.params.seed);
        self.reports.push((label, o.report.clone()));
    }
}

fn first_dirty(outcomes: &[StressOutcome]) -> Option<&StressOutcome> {
    outcomes.iter().find(|o| !o.is_clean())
}

fn oracle_equivalence(seen: &mut Seen) -> (Verdict, String) {
    let start = Instant::now();
    let mut outcomes = Vec::new();
    for threads in [1, 2, 4, 8] {
        for seed in 0..20 {
            let o = stress(
                Scenario::MixedRandom,
                StressParams {
                    threads,
                    seed,
                    size: 100_000,
                },
            );
            seen.outcome(&o);
            outcomes.push(o);
        }
    }
    let took = start.elapsed();
    let dirty = first_dirty(&outcomes);
    let ok = dirty.is_none() && took < Duration::from_secs(60);
    let detail = match dirty {
        Some(o) => format!("{o}"),
        None => format!("80 runs clean in {:.1}s", took.as_secs_f64()),
    };
    (verdict(ok), detail)
}

fn uniqueness(seen: &mut Seen) -> (Verdict, String) {
    let mut outcomes = Vec::new();
    for seed in 0..20 {
        let o = stress(
            Scenario::SameKeyStorm,
            StressParams {
                threads: 8,
                seed,
                size: 1_000,
            },
        );
        seen.outcome(&o);
        outcomes.push(o);
    }
    let creators: u64 = outcomes.iter().map(|o| o.tallies.inserted).sum();
    match first_dirty(&outcomes) {
        Some(o) => (Verdict::Fail, format!("{o}")),
        None => (
            verdict(creators == 20 * 1_000),
            format!("20 seeds, {creators} creators for 20000 keys"),
        ),
    }
}

fn remap_visibility(seen: &mut Seen) -> (Verdict, String) {
    let o = stress(
        Scenario::ReaderDuringExpansion,
        StressParams {
            threads: 8,
            seed: 1,
            size: 1_000_000,
        },
    );
    seen.outcome(&o);
    let t = &o.tallies;
    // depth 2 is the third level
    let ok = o.is_clean()
        && t.witness_probes >= 1_000_000
        && t.witness_misses == 0
        && o.report.deepest_level >= 2;
    let detail = format!(
        "{} probes, {} misses, deepest level depth {}, {} cascades, {} restarts",
        t.witness_probes, t.witness_misses, o.report.deepest_level, t.cascades, t.restarts
    );
    (verdict(ok), detail)
}

fn structural(seen: &mut Seen) -> (Verdict, String) {
    for scenario in Scenario::ALL {
        for (threads, seed) in [(2, 7), (8, 8)] {
            let size = match scenario {
                Scenario::ReaderDuringExpansion => 100_000,
                s => s.default_size(),
            };
            seen.outcome(&stress(scenario, StressParams { threads, seed, size }));
        }
    }
    if let Some((label, r)) = seen.reports.iter().find(|(_, r)| !r.is_clean()) {
        return (Verdict::Fail, format!("{label}: {r}"));
    }
    let fixtures = violation_fixtures();
    for (code, report) in &fixtures {
        if !exactly(*code, report) {
            return (Verdict::Fail, format!("fixture for {code}: {report}"));
        }
    }
    let codes: Vec<String> = fixtures.iter().map(|(c, _)| c.to_string()).collect();
    (
        Verdict::Pass,
        format!(
            "{} stress reports empty; fixtures gave exactly {}",
            seen.reports.len(),
            codes.join(", ")
        ),
    )
}

fn remap_steps(seen: &mut Seen) -> (Verdict, String) {
    let mut problems = Vec::new();
    for (name, run) in [
        ("second-level", second_level_remap as fn() -> _),
        ("third-level", third_level_remap),
    ] {
        match run() {
            Err(e) => problems.push(format!("{name}: {e}")),
            Ok((trace, m)) => {
                problems.extend(m.0.into_iter().map(|p| format!("{name}: {p}")));
                seen.reports.push((name.to_string(), trace.final_report));
            }
        }
    }
    match problems.first() {
        None => (Verdict::Pass, "all step shapes matched in both remap scripts".into()),
        Some(p) => (Verdict::Fail, format!("{} mismatches, first: {p}", problems.len())),
    }
}

fn write_bound(seen: &Seen) -> (Verdict, String) {
    let worst = seen
        .reports
        .iter()
        .max_by_key(|(_, r)| r.max_bucket_writes)
        .expect("reports collected");
    (
        verdict(worst.1.max_bucket_writes <= 2),
        format!(
            "max {} writes per bucket over {} instrumented runs ({})",
            worst.1.max_bucket_writes,
            seen.reports.len(),
            worst.0
        ),
    )
}

fn trend() -> (Verdict, String) {
    let cores = thread::available_parallelism().map_or(1, |n| n.get());
    if cores < 4 {
        return (
            Verdict::Skip,
            format!("needs at least 4 cores, {cores} available"),
        );
    }
    let (mut faster, mut flatter) = (0, 0);
    for seed in 1..=5 {
        let run = |implementation| {
            let spec = WorkloadSpec {
                keys: 100_000,
                seed,
                threads: vec![cores],
                repeats: 5,
                ..WorkloadSpec::new(implementation, Mode::SameWork)
            };
            run_benchmark(&spec)
        };
        let (lf, lb) = match (run(Impl::Lfht), run(Impl::Lockbased)) {
            (Ok(a), Ok(b)) => (a, b),
            (Err(e), _) | (_, Err(e)) => return (Verdict::Fail, e.to_string()),
        };
        let mean = |r: &lfht_bench::RunResult| r.cell(cores).map(|c| c.mean());
        if mean(&lf) <= mean(&lb) {
            faster += 1;
        }
        if lf.overhead(cores) <= lb.overhead(cores) {
            flatter += 1;
        }
    }
    (
        verdict(faster >= 4 && flatter >= 4),
        format!("{cores} threads: lfht faster in {faster}/5 seeds, lower overhead in {flatter}/5"),
    )
}

fn tabling_determinism() -> (Verdict, String) {
    let graph = Graph::grid(4);
    let sources: Vec<u32> = (0..16).collect();
    let mut outputs = BTreeSet::new();
    let mut sizes = Vec::new();
    for threads in [1, 2, 4, 8] {
        let ts = TableSpace::new(Config::default()).expect("default config");
        let pairs = tabled_path(&graph, &sources, threads, &ts);
        sizes.push(pairs.len());
        let text: String = pairs.iter().map(|(s, t)| format!("{s} {t}\n")).collect();
        outputs.insert(text);
    }
    (
        verdict(sizes.iter().all(|&n| n == 256) && outputs.len() == 1),
        format!("pair counts {sizes:?}, {} distinct outputs", outputs.len()),
    )
}

fn sequential_overhead() -> (Verdict, String) {
    let run = |implementation| {
        let spec = WorkloadSpec {
            keys: 1_000_000,
            threads: vec![1],
            repeats: 3,
            ..WorkloadSpec::new(implementation, Mode::Partitioned)
        };
        run_benchmark(&spec).map(|r| r.cells[0].mean())
    };
    match (run(Impl::Lfht), run(Impl::Lockbased)) {
        (Ok(lf), Ok(lb)) => {
            // throughput ratio: same key count, so the inverse time ratio
            let ratio = lb / lf;
            (
                verdict(ratio >= 0.7),
                format!("lfht {lf:.3}s, lockbased {lb:.3}s, throughput ratio {ratio:.2}"),
            )
        }
        (Err(e), _) | (_, Err(e)) => (Verdict::Fail, e.to_string()),
    }
}

fn main() -> ExitCode {
    let mut seen = Seen::default();
    let mut failed = 0;
    let mut report = |n: u32, name: &str, (v, detail): (Verdict, String)| {
        if matches!(v, Verdict::Fail) {
            failed += 1;
        }
        println!("criterion {n} {name}: {v} ({detail})");
    };
    report(1, "oracle-equivalence", oracle_equivalence(&mut seen));
    report(2, "check-insert-uniqueness", uniqueness(&mut seen));
    report(3, "remap-visibility", remap_visibility(&mut seen));
    report(4, "structural-validator", structural(&mut seen));
    report(5, "remap-step-conformance", remap_steps(&mut seen));
    report(6, "bucket-write-bound", write_bound(&seen));
    report(7, "trend", trend());
    report(8, "tabling-determinism", tabling_determinism());
    report(9, "sequential-overhead", sequential_overhead());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criterion(s) failed");
        ExitCode::FAILURE
    }
}
