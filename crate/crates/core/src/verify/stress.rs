//! Multi-threaded stress scenarios, each finished by a structural check.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::Barrier;
use std::thread;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::validate::{validate, ValidationReport};
use crate::config::Config;
use crate::hash::{IdentityHash, MixHash};
use crate::map::TrieMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scenario {
    /// Every thread check/inserts the same key set; each key must have
    /// exactly one creator and one leaf.
    SameKeyStorm,
    /// Readers probe a pre-inserted witness set while writers force
    /// expansions through the buckets holding it.
    ReaderDuringExpansion,
    /// All threads insert keys colliding in the first three hash chunks.
    ColliderCascade,
    /// Random mix of check/inserts and lookups against a winners oracle.
    MixedRandom,
}

impl Scenario {
    pub const ALL: [Scenario; 4] = [
        Scenario::SameKeyStorm,
        Scenario::ReaderDuringExpansion,
        Scenario::ColliderCascade,
        Scenario::MixedRandom,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::SameKeyStorm => "same-key-storm",
            Scenario::ReaderDuringExpansion => "reader-during-expansion",
            Scenario::ColliderCascade => "collider-cascade",
            Scenario::MixedRandom => "mixed-random",
        }
    }

    /// Scenario size when none is given: keys for the storm and collider
    /// runs, reader probes, or operations.
    pub fn default_size(self) -> usize {
        match self {
            Scenario::SameKeyStorm => 1_000,
            Scenario::ReaderDuringExpansion => 1_000_000,
            Scenario::ColliderCascade => 20_000,
            Scenario::MixedRandom => 100_000,
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown scenario `{0}`")]
pub struct UnknownScenario(pub String);

impl FromStr for Scenario {
    type Err = UnknownScenario;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Scenario::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| UnknownScenario(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StressParams {
    pub threads: usize,
    pub seed: u64,
    pub size: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Tallies {
    pub ops: u64,
    pub inserted: u64,
    /// Keys with other than exactly one creator, or whose callers saw
    /// different leaves.
    pub uniqueness_violations: u64,
    /// Outcomes or lookups that disagree with the winning insert.
    pub value_mismatches: u64,
    pub witness_probes: u64,
    pub witness_misses: u64,
    pub expansions: u64,
    pub cascades: u64,
    pub restarts: u64,
}

#[derive(Debug, Clone)]
pub struct StressOutcome {
    pub scenario: Scenario,
    pub params: StressParams,
    pub report: ValidationReport,
    pub tallies: Tallies,
}

impl StressOutcome {
    pub fn is_clean(&self) -> bool {
        self.report.is_clean()
            && self.tallies.uniqueness_violations == 0
            && self.tallies.value_mismatches == 0
            && self.tallies.witness_misses == 0
    }
}

impl fmt::Display for StressOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let t = &self.tallies;
        writeln!(
            f,
            "{} threads={} seed={} size={}: {}",
            self.scenario,
            self.params.threads,
            self.params.seed,
            self.params.size,
            if self.is_clean() { "clean" } else { "VIOLATIONS" }
        )?;
        writeln!(
            f,
            "  ops {} inserted {} uniqueness {} mismatches {} probes {} misses {} expansions {} cascades {} restarts {}",
            t.ops,
            t.inserted,
            t.uniqueness_violations,
            t.value_mismatches,
            t.witness_probes,
            t.witness_misses,
            t.expansions,
            t.cascades,
            t.restarts
        )?;
        write!(f, "  {}", self.report)
    }
}

pub fn stress(scenario: Scenario, params: StressParams) -> StressOutcome {
    let params = StressParams {
        threads: params.threads.max(1),
        ..params
    };
    match scenario {
        Scenario::SameKeyStorm => same_key_storm(params),
        Scenario::ReaderDuringExpansion => reader_during_expansion(params),
        Scenario::ColliderCascade => collider_cascade(params),
        Scenario::MixedRandom => mixed_random(params),
    }
}

fn thread_rng(seed: u64, t: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ (t as u64).wrapping_add(1).wrapping_mul(0x9e37_79b9_7f4a_7c15))
}

fn instrumented() -> Config {
    Config::default().instrumented()
}

fn absorb_stats<K, V, H>(map: &TrieMap<K, V, H>, tallies: &mut Tallies) {
    if let Ok(s) = map.debug_stats() {
        tallies.expansions = s.expansions;
        tallies.cascades = s.cascades;
        tallies.restarts = s.restarts;
    }
}

fn distinct_keys(rng: &mut ChaCha8Rng, n: usize) -> Vec<u64> {
    let mut keys = Vec::with_capacity(n);
    let mut seen = std::collections::HashSet::with_capacity(n);
    while keys.len() < n {
        let k: u64 = rng.gen();
        if seen.insert(k) {
            keys.push(k);
        }
    }
    keys
}

fn same_key_storm(params: StressParams) -> StressOutcome {
    let map: TrieMap<u64, u64> = TrieMap::new(instrumented()).expect("valid config");
    let keys = distinct_keys(&mut thread_rng(params.seed, usize::MAX), params.size);
    let barrier = Barrier::new(params.threads);
    // per thread: (leaf id, inserted) indexed like `keys`
    let results: Vec<Vec<(usize, bool)>> = thread::scope(|s| {
        let handles: Vec<_> = (0..params.threads)
            .map(|t| {
                let (map, keys, barrier) = (&map, &keys, &barrier);
                s.spawn(move || {
                    let mut order: Vec<usize> = (0..keys.len()).collect();
                    order.shuffle(&mut thread_rng(params.seed, t));
                    let mut out = vec![(0usize, false); keys.len()];
                    barrier.wait();
                    for i in order {
                        let o = map.insert_or_get(keys[i], t as u64);
                        out[i] = (o.leaf.id(), o.inserted);
                    }
                    out
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    });

    let mut tallies = Tallies {
        ops: (params.threads * keys.len()) as u64,
        ..Tallies::default()
    };
    let mut oracle = HashMap::with_capacity(keys.len());
    for (i, &k) in keys.iter().enumerate() {
        let creators: Vec<usize> = (0..params.threads).filter(|&t| results[t][i].1).collect();
        let same_leaf = results.iter().all(|r| r[i].0 == results[0][i].0);
        if creators.len() != 1 || !same_leaf {
            tallies.uniqueness_violations += 1;
        }
        if let Some(&t) = creators.first() {
            oracle.insert(k, t as u64);
        }
        tallies.inserted += creators.len() as u64;
    }
    absorb_stats(&map, &mut tallies);
    let report = validate(&map, Some(&oracle));
    StressOutcome {
        scenario: Scenario::SameKeyStorm,
        params,
        report,
        tallies,
    }
}

/// Keys whose two lowest 3-bit chunks are zero, so that they all share one
/// bucket at depths 0 and 1 under identity hashing.
fn deep_key(x: u64) -> u64 {
    x << 6
}

const WITNESSES: u64 = 100;
const WRITER_KEYS: u64 = 50_000;

fn reader_during_expansion(params: StressParams) -> StressOutcome {
    let config = Config::new(3, 3).instrumented();
    let map: TrieMap<u64, u64, IdentityHash> = TrieMap::new(config).expect("valid config");
    let mut oracle = HashMap::new();
    for x in 0..WITNESSES {
        map.insert_or_get(deep_key(x), x);
        oracle.insert(deep_key(x), x);
    }
    let readers = (params.threads / 2).max(1);
    let writers = (params.threads - params.threads / 2).max(1);
    let probes_wanted = params.size as u64;
    let writers_left = AtomicU64::new(writers as u64);
    let probes = AtomicU64::new(0);
    let misses = AtomicU64::new(0);
    let done = AtomicBool::new(false);
    let barrier = Barrier::new(readers + writers);

    let mut writer_keys: Vec<u64> = (WITNESSES..WITNESSES + WRITER_KEYS).collect();
    writer_keys.shuffle(&mut thread_rng(params.seed, usize::MAX));
    let chunk = writer_keys.len().div_ceil(writers);

    thread::scope(|s| {
        for part in writer_keys.chunks(chunk) {
            let (map, barrier, writers_left) = (&map, &barrier, &writers_left);
            s.spawn(move || {
                barrier.wait();
                for &x in part {
                    map.insert_or_get(deep_key(x), x);
                }
                writers_left.fetch_sub(1, Ordering::Release);
            });
        }
        for r in 0..readers {
            let (map, barrier, probes, misses, done, writers_left) =
                (&map, &barrier, &probes, &misses, &done, &writers_left);
            s.spawn(move || {
                let mut rng = thread_rng(params.seed, 1000 + r);
                barrier.wait();
                let mut local = 0u64;
                loop {
                    for _ in 0..256 {
                        let x = rng.gen_range(0..WITNESSES);
                        if map.lookup(&deep_key(x)) != Some(&x) {
                            misses.fetch_add(1, Ordering::Relaxed);
                        }
                    }
                    local += 256;
                    let total = probes.fetch_add(256, Ordering::Relaxed) + 256;
                    if done.load(Ordering::Relaxed) {
                        break;
                    }
                    if writers_left.load(Ordering::Acquire) == 0 && total >= probes_wanted {
                        done.store(true, Ordering::Relaxed);
                        break;
                    }
                    if local.is_multiple_of(4096) {
                        thread::yield_now();
                    }
                }
            });
        }
    });

    for x in WITNESSES..WITNESSES + WRITER_KEYS {
        oracle.insert(deep_key(x), x);
    }
    let mut tallies = Tallies {
        ops: WITNESSES + WRITER_KEYS + probes.load(Ordering::Relaxed),
        inserted: map.len() as u64,
        witness_probes: probes.load(Ordering::Relaxed),
        witness_misses: misses.load(Ordering::Relaxed),
        ..Tallies::default()
    };
    absorb_stats(&map, &mut tallies);
    let report = validate(&map, Some(&oracle));
    StressOutcome {
        scenario: Scenario::ReaderDuringExpansion,
        params,
        report,
        tallies,
    }
}

/// Fixed low nine bits shared by every collider key.
const COLLIDER_LOW: u64 = 0b101_011_110;

fn collider_cascade(params: StressParams) -> StressOutcome {
    let config = Config::new(3, 3).instrumented();
    let map: TrieMap<u64, u64, IdentityHash> = TrieMap::new(config).expect("valid config");
    let mut rng = thread_rng(params.seed, usize::MAX);
    let keys: Vec<u64> = distinct_keys(&mut rng, params.size)
        .into_iter()
        .map(|k| (k << 9) | COLLIDER_LOW)
        .collect();
    let barrier = Barrier::new(params.threads);
    let inserted = AtomicU64::new(0);
    thread::scope(|s| {
        for t in 0..params.threads {
            let (map, keys, barrier, inserted) = (&map, &keys, &barrier, &inserted);
            s.spawn(move || {
                let mut order = keys.clone();
                order.shuffle(&mut thread_rng(params.seed, t));
                barrier.wait();
                for k in order {
                    if map.insert_or_get(k, k.wrapping_mul(3)).inserted {
                        inserted.fetch_add(1, Ordering::Relaxed);
                    }
                }
            });
        }
    });
    let oracle: HashMap<u64, u64> = keys.iter().map(|&k| (k, k.wrapping_mul(3))).collect();
    let mut tallies = Tallies {
        ops: (params.threads * keys.len()) as u64,
        inserted: inserted.load(Ordering::Relaxed),
        ..Tallies::default()
    };
    if tallies.inserted != keys.len() as u64 {
        tallies.uniqueness_violations += tallies.inserted.abs_diff(keys.len() as u64);
    }
    absorb_stats(&map, &mut tallies);
    let report = validate(&map, Some(&oracle));
    StressOutcome {
        scenario: Scenario::ColliderCascade,
        params,
        report,
        tallies,
    }
}

enum Op {
    Insert { key: u64, got: u64, inserted: bool },
    Lookup { key: u64, got: Option<u64> },
}

fn mixed_random(params: StressParams) -> StressOutcome {
    let map: TrieMap<u64, u64, MixHash> = TrieMap::new(instrumented()).expect("valid config");
    let key_space = (params.size as u64 / 4).max(1);
    let per_thread = params.size.div_ceil(params.threads);
    let barrier = Barrier::new(params.threads);
    let logs: Vec<Vec<Op>> = thread::scope(|s| {
        let handles: Vec<_> = (0..params.threads)
            .map(|t| {
                let (map, barrier) = (&map, &barrier);
                s.spawn(move || {
                    let mut rng = thread_rng(params.seed, t);
                    let mut log = Vec::with_capacity(per_thread);
                    barrier.wait();
                    for _ in 0..per_thread {
                        let key = rng.gen_range(0..key_space);
                        if rng.gen_bool(0.5) {
                            let o = map.insert_or_get(key, rng.gen());
                            log.push(Op::Insert {
                                key,
                                got: *o.leaf.value(),
                                inserted: o.inserted,
                            });
                        } else {
                            log.push(Op::Lookup {
                                key,
                                got: map.lookup(&key).copied(),
                            });
                        }
                    }
                    log
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    });

    let mut tallies = Tallies::default();
    let mut winners: HashMap<u64, u64> = HashMap::new();
    for op in logs.iter().flatten() {
        tallies.ops += 1;
        if let Op::Insert {
            key,
            got,
            inserted: true,
        } = *op
        {
            tallies.inserted += 1;
            if winners.insert(key, got).is_some() {
                tallies.uniqueness_violations += 1;
            }
        }
    }
    for op in logs.iter().flatten() {
        let (key, got) = match *op {
            Op::Insert { key, got, .. } => (key, Some(got)),
            Op::Lookup { key, got } => (key, got),
        };
        if let Some(v) = got {
            if winners.get(&key) != Some(&v) {
                tallies.value_mismatches += 1;
            }
        }
    }
    if map.len() != winners.len() {
        tallies.uniqueness_violations += map.len().abs_diff(winners.len()) as u64;
    }
    absorb_stats(&map, &mut tallies);
    let report = validate(&map, Some(&winners));
    StressOutcome {
        scenario: Scenario::MixedRandom,
        params,
        report,
        tallies,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scenario_names_round_trip() {
        for s in Scenario::ALL {
            assert_eq!(s.name().parse::<Scenario>(), Ok(s));
        }
        assert!("nope".parse::<Scenario>().is_err());
    }

    #[test]
    fn small_runs_are_clean() {
        for s in Scenario::ALL {
            let size = match s {
                Scenario::ReaderDuringExpansion => 20_000,
                _ => 2_000,
            };
            let out = stress(
                s,
                StressParams {
                    threads: 3,
                    seed: 11,
                    size,
                },
            );
            assert!(out.is_clean(), "{out}");
        }
    }
}
