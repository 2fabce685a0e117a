use std::collections::{BTreeSet, HashMap, VecDeque};
use std::fmt;
use std::hint::black_box;
use std::str::FromStr;
use std::sync::Barrier;
use std::thread;
use std::time::Instant;

use lfht::tabling::{tabled_path, Graph, TableSpace};
use lfht::verify::validate;
use lfht::{CheckInsert, Config, IdentityHash, KeyHasher, LockedMap, MixHash, TrieMap};

use crate::keys::{collider_keys, uniform_keys, Distribution};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Impl {
    Lfht,
    Lockbased,
}

impl Impl {
    pub fn name(self) -> &'static str {
        match self {
            Impl::Lfht => "lfht",
            Impl::Lockbased => "lockbased",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Every thread runs the whole key stream.
    SameWork,
    /// The key stream is split evenly across threads.
    Partitioned,
    /// All-pairs tabled reachability over a graph.
    PathDemo,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::SameWork => "same-work",
            Mode::Partitioned => "partitioned",
            Mode::PathDemo => "path-demo",
        }
    }
}

macro_rules! named {
    ($ty:ident, $what:literal, [$($v:ident),*]) => {
        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.name())
            }
        }

        impl FromStr for $ty {
            type Err = BenchError;

            fn from_str(s: &str) -> Result<Self, BenchError> {
                [$($ty::$v),*]
                    .into_iter()
                    .find(|x| x.name() == s)
                    .ok_or_else(|| BenchError::Usage(format!("unknown {} `{s}`", $what)))
            }
        }
    };
}

named!(Impl, "impl", [Lfht, Lockbased]);
named!(Mode, "mode", [SameWork, Partitioned, PathDemo]);

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum BenchError {
    #[error("{0}")]
    Usage(String),
    #[error("{implementation} {mode} with {threads} threads failed validation: {detail}")]
    Validation {
        implementation: Impl,
        mode: Mode,
        threads: usize,
        detail: String,
    },
}

#[derive(Debug, Clone)]
pub struct WorkloadSpec {
    pub implementation: Impl,
    pub mode: Mode,
    /// Length of the key stream; ignored by path-demo.
    pub keys: usize,
    pub dist: Distribution,
    pub seed: u64,
    /// A single-thread run is always added as the baseline for ratios.
    pub threads: Vec<usize>,
    pub repeats: usize,
    pub config: Config,
    /// Path-demo graph; a grid of side 8 when absent.
    pub graph: Option<Graph>,
}

impl WorkloadSpec {
    pub fn new(implementation: Impl, mode: Mode) -> Self {
        WorkloadSpec {
            implementation,
            mode,
            keys: 100_000,
            dist: Distribution::Uniform,
            seed: 1,
            threads: vec![1, 2, 4, 8],
            repeats: 5,
            config: Config::default(),
            graph: None,
        }
    }

    pub fn check(&self) -> Result<(), BenchError> {
        self.config
            .validate()
            .map_err(|e| BenchError::Usage(e.to_string()))?;
        if self.repeats == 0 {
            return Err(BenchError::Usage("repeats must be at least 1".into()));
        }
        if self.threads.is_empty() || self.threads.contains(&0) {
            return Err(BenchError::Usage("thread counts must be at least 1".into()));
        }
        if self.mode == Mode::PathDemo && self.implementation != Impl::Lfht {
            return Err(BenchError::Usage("path-demo runs on lfht only".into()));
        }
        Ok(())
    }

    /// Thread counts in run order: ascending, deduplicated, starting at 1.
    pub fn thread_counts(&self) -> Vec<usize> {
        let mut t: BTreeSet<usize> = self.threads.iter().copied().collect();
        t.insert(1);
        t.into_iter().collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub threads: usize,
    pub seconds: Vec<f64>,
}

impl Cell {
    pub fn mean(&self) -> f64 {
        self.seconds.iter().sum::<f64>() / self.seconds.len() as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub implementation: Impl,
    pub mode: Mode,
    pub keys: usize,
    pub w: u32,
    pub threshold: usize,
    pub cells: Vec<Cell>,
}

impl RunResult {
    fn base(&self) -> Option<f64> {
        self.cells.iter().find(|c| c.threads == 1).map(Cell::mean)
    }

    /// Mean time at `threads` over the single-thread mean; same-work only.
    pub fn overhead(&self, threads: usize) -> Option<f64> {
        if self.mode != Mode::SameWork {
            return None;
        }
        Some(self.cell(threads)?.mean() / self.base()?)
    }

    /// Single-thread mean over the mean at `threads`; not for same-work.
    pub fn speedup(&self, threads: usize) -> Option<f64> {
        if self.mode == Mode::SameWork {
            return None;
        }
        Some(self.base()? / self.cell(threads)?.mean())
    }

    pub fn cell(&self, threads: usize) -> Option<&Cell> {
        self.cells.iter().find(|c| c.threads == threads)
    }
}

/// Runs one warm-up and `repeats` timed runs per thread count. Every run,
/// warm-up included, is validated against the expected contents before
/// its time is kept.
pub fn run_benchmark(spec: &WorkloadSpec) -> Result<RunResult, BenchError> {
    spec.check()?;
    let threads = spec.thread_counts();
    let (keys, cells) = match spec.mode {
        Mode::PathDemo => {
            let grid;
            let graph = match &spec.graph {
                Some(g) => g,
                None => {
                    grid = Graph::grid(8);
                    &grid
                }
            };
            (graph.node_count() as usize, path_cells(spec, graph, &threads)?)
        }
        _ => (spec.keys, map_cells(spec, &threads)?),
    };
    Ok(RunResult {
        implementation: spec.implementation,
        mode: spec.mode,
        keys,
        w: spec.config.w,
        threshold: spec.config.threshold,
        cells,
    })
}

fn map_cells(spec: &WorkloadSpec, threads: &[usize]) -> Result<Vec<Cell>, BenchError> {
    let keys = match spec.dist {
        Distribution::Uniform => uniform_keys(spec.seed, spec.keys),
        Distribution::Collider { fan } => collider_keys(spec.seed, spec.keys, spec.config.w, fan),
    };
    let expected: HashMap<u64, u64> = keys.iter().map(|&k| (k, k)).collect();
    let lb_buckets = spec.config.buckets_per_level();
    match (spec.implementation, spec.dist) {
        (Impl::Lfht, Distribution::Uniform) => {
            timed_cells(spec, threads, &keys, || trie::<MixHash>(spec), |m| check_trie(m, &expected))
        }
        (Impl::Lfht, Distribution::Collider { .. }) => timed_cells(
            spec,
            threads,
            &keys,
            || trie::<IdentityHash>(spec),
            |m| check_trie(m, &expected),
        ),
        (Impl::Lockbased, Distribution::Uniform) => timed_cells(
            spec,
            threads,
            &keys,
            || LockedMap::<u64, u64, MixHash>::new(lb_buckets).expect("power of two"),
            |m| check_locked(m, &expected),
        ),
        (Impl::Lockbased, Distribution::Collider { .. }) => timed_cells(
            spec,
            threads,
            &keys,
            || LockedMap::<u64, u64, IdentityHash>::new(lb_buckets).expect("power of two"),
            |m| check_locked(m, &expected),
        ),
    }
}

fn trie<H: Default>(spec: &WorkloadSpec) -> TrieMap<u64, u64, H> {
    TrieMap::new(spec.config).expect("config checked")
}

fn check_trie<H: KeyHasher<u64>>(
    map: &TrieMap<u64, u64, H>,
    expected: &HashMap<u64, u64>,
) -> Result<(), String> {
    let report = validate(map, Some(expected));
    if !report.is_clean() {
        return Err(report.to_string());
    }
    if map.len() != expected.len() {
        return Err(format!("{} keys counted, expected {}", map.len(), expected.len()));
    }
    Ok(())
}

fn check_locked<H: KeyHasher<u64>>(
    map: &LockedMap<u64, u64, H>,
    expected: &HashMap<u64, u64>,
) -> Result<(), String> {
    if map.len() != expected.len() || map.entries().len() != expected.len() {
        return Err(format!("{} keys, expected {}", map.len(), expected.len()));
    }
    match expected.iter().find(|(k, v)| map.lookup(k) != Some(v)) {
        Some((k, _)) => Err(format!("key {k} missing or wrong")),
        None => Ok(()),
    }
}

fn timed_cells<M: CheckInsert<u64, u64>>(
    spec: &WorkloadSpec,
    threads: &[usize],
    keys: &[u64],
    make: impl Fn() -> M,
    check: impl Fn(&M) -> Result<(), String>,
) -> Result<Vec<Cell>, BenchError> {
    let mut cells = Vec::with_capacity(threads.len());
    for &t in threads {
        let mut seconds = Vec::with_capacity(spec.repeats);
        for round in 0..=spec.repeats {
            let map = make();
            let elapsed = time_inserts(&map, keys, spec.mode, t);
            check(&map).map_err(|detail| BenchError::Validation {
                implementation: spec.implementation,
                mode: spec.mode,
                threads: t,
                detail,
            })?;
            if round > 0 {
                seconds.push(elapsed);
            }
        }
        cells.push(Cell { threads: t, seconds });
    }
    Ok(cells)
}

fn time_inserts<M: CheckInsert<u64, u64>>(map: &M, keys: &[u64], mode: Mode, threads: usize) -> f64 {
    let barrier = Barrier::new(threads + 1);
    let part = keys.len().div_ceil(threads).max(1);
    thread::scope(|s| {
        for t in 0..threads {
            let (barrier, map) = (&barrier, map);
            let mine: &[u64] = match mode {
                Mode::SameWork => keys,
                _ => keys.chunks(part).nth(t).unwrap_or(&[]),
            };
            s.spawn(move || {
                barrier.wait();
                for &k in mine {
                    black_box(map.check_insert(k, k));
                }
            });
        }
        barrier.wait();
        let start = Instant::now();
        // the scope joins every worker before returning
        start
    })
    .elapsed()
    .as_secs_f64()
}

fn path_cells(spec: &WorkloadSpec, graph: &Graph, threads: &[usize]) -> Result<Vec<Cell>, BenchError> {
    let expected = reachability(graph);
    let sources: Vec<u32> = (0..graph.node_count()).collect();
    let mut cells = Vec::with_capacity(threads.len());
    for &t in threads {
        let mut seconds = Vec::with_capacity(spec.repeats);
        for round in 0..=spec.repeats {
            let ts = TableSpace::new(spec.config).expect("config checked");
            let start = Instant::now();
            let got = tabled_path(graph, &sources, t, &ts);
            let elapsed = start.elapsed().as_secs_f64();
            if got != expected {
                return Err(BenchError::Validation {
                    implementation: spec.implementation,
                    mode: spec.mode,
                    threads: t,
                    detail: format!("{} answers, expected {}", got.len(), expected.len()),
                });
            }
            if round > 0 {
                seconds.push(elapsed);
            }
        }
        cells.push(Cell { threads: t, seconds });
    }
    Ok(cells)
}

/// All `(s, t)` with a non-empty path from `s` to `t`, by breadth-first
/// search from every node.
pub fn reachability(graph: &Graph) -> BTreeSet<(u32, u32)> {
    let n = graph.node_count() as usize;
    let mut out = BTreeSet::new();
    for s in 0..graph.node_count() {
        let mut seen = vec![false; n];
        let mut queue: VecDeque<u32> = graph.successors(s).iter().copied().collect();
        while let Some(v) = queue.pop_front() {
            if std::mem::replace(&mut seen[v as usize], true) {
                continue;
            }
            out.insert((s, v));
            queue.extend(graph.successors(v).iter().copied());
        }
    }
    out
}
