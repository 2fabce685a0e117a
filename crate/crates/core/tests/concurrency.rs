//! Multi-threaded insert and lookup against sequential oracles.

use std::collections::HashMap;
use std::sync::Barrier;
use std::thread;

use lfht::hash::IdentityHash;
use lfht::verify::{stress, validate, Scenario, StressParams};
use lfht::{CheckInsert, Config, LockedMap, TrieMap};

#[test]
fn racing_expansions_on_one_bucket() {
    // Every key lands in root bucket 0 and then keeps colliding for two
    // more levels, so each thread repeatedly races for the same expansions.
    for seed in 0..20u64 {
        let map: TrieMap<u64, u64, IdentityHash> =
            TrieMap::new(Config::new(3, 3).instrumented()).unwrap();
        let threads = 8;
        let barrier = Barrier::new(threads);
        thread::scope(|s| {
            for t in 0..threads as u64 {
                let (map, barrier) = (&map, &barrier);
                s.spawn(move || {
                    barrier.wait();
                    for i in 0..64u64 {
                        let x = (i * 8 + (t + seed) % 8) << 9;
                        map.insert_or_get(x, x);
                    }
                });
            }
        });
        let oracle: HashMap<u64, u64> = (0..512u64).map(|x| (x << 9, x << 9)).collect();
        let r = validate(&map, Some(&oracle));
        assert!(r.is_clean(), "seed {seed}: {r}");
        assert!(r.max_bucket_writes <= 2);
        assert!(r.deepest_level >= 3);
    }
}

#[test]
fn concurrent_inserts_of_disjoint_ranges() {
    let map: TrieMap<u64, u64> = TrieMap::new(Config::default()).unwrap();
    let threads = 6;
    thread::scope(|s| {
        for t in 0..threads {
            let map = &map;
            s.spawn(move || {
                for k in (t..60_000).step_by(threads as usize) {
                    assert!(map.insert_or_get(k, k * 2).inserted);
                }
            });
        }
    });
    assert_eq!(map.len(), 60_000);
    for k in 0..60_000 {
        assert_eq!(map.lookup(&k), Some(&(k * 2)));
    }
}

#[test]
fn lookups_never_see_a_key_disappear() {
    let map: TrieMap<u64, u64> = TrieMap::new(Config::new(2, 2)).unwrap();
    let barrier = Barrier::new(4);
    thread::scope(|s| {
        for t in 0..2u64 {
            let (map, barrier) = (&map, &barrier);
            s.spawn(move || {
                barrier.wait();
                for k in 0..20_000u64 {
                    map.insert_or_get(k * 2 + t, k);
                }
            });
        }
        for _ in 0..2 {
            let (map, barrier) = (&map, &barrier);
            s.spawn(move || {
                barrier.wait();
                // once found, every later lookup must succeed
                let mut seen = Vec::new();
                for round in 0..40u64 {
                    for k in (round..40_000).step_by(97) {
                        if map.lookup(&k).is_some() {
                            seen.push(k);
                        }
                    }
                    for k in &seen {
                        assert!(map.contains_key(k), "{k} vanished");
                    }
                }
            });
        }
    });
}

fn storm<M: CheckInsert<u64, u64>>(map: &M, threads: usize) -> Vec<Vec<(usize, bool)>> {
    let barrier = Barrier::new(threads);
    thread::scope(|s| {
        let hs: Vec<_> = (0..threads)
            .map(|t| {
                let (map, barrier) = (map, &barrier);
                s.spawn(move || {
                    barrier.wait();
                    (0..2_000u64)
                        .map(|k| map.check_insert(k, t as u64))
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        hs.into_iter().map(|h| h.join().unwrap()).collect()
    })
}

fn assert_single_creator(results: &[Vec<(usize, bool)>]) {
    for k in 0..results[0].len() {
        let creators = results.iter().filter(|r| r[k].1).count();
        assert_eq!(creators, 1, "key {k}");
        assert!(results.iter().all(|r| r[k].0 == results[0][k].0));
    }
}

#[test]
fn both_maps_elect_one_creator() {
    let lf: TrieMap<u64, u64> = TrieMap::new(Config::default()).unwrap();
    assert_single_creator(&storm(&lf, 8));
    assert_eq!(lf.key_count(), 2_000);
    let lb: LockedMap<u64, u64> = LockedMap::new(8).unwrap();
    assert_single_creator(&storm(&lb, 8));
    assert_eq!(lb.key_count(), 2_000);
}

#[test]
fn stress_scenarios_are_clean() {
    for scenario in Scenario::ALL {
        for (threads, seed) in [(1, 1), (4, 2), (8, 3)] {
            let size = match scenario {
                Scenario::ReaderDuringExpansion => 50_000,
                _ => 5_000,
            };
            let out = stress(scenario, StressParams { threads, seed, size });
            assert!(out.is_clean(), "{out}");
        }
    }
}

#[test]
fn collider_cascade_reaches_depth_three() {
    let out = stress(
        Scenario::ColliderCascade,
        StressParams {
            threads: 4,
            seed: 9,
            size: 5_000,
        },
    );
    assert!(out.is_clean(), "{out}");
    assert!(out.report.deepest_level >= 3);
    assert!(out.tallies.expansions > 0);
}
