use std::collections::{HashMap, HashSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::hash::IdentityHash;
use crate::verify::{validate, BucketShape, Shape};

type IdMap = TrieMap<u64, u64, IdentityHash>;

fn id_map(w: u32, threshold: usize) -> IdMap {
    TrieMap::new(Config::new(w, threshold).instrumented()).unwrap()
}

#[test]
fn new_map_buckets_reference_root() {
    let m = id_map(3, 3);
    let shape = Shape::capture(&m);
    assert_eq!(shape.levels.len(), 1);
    assert!(shape.levels["/"].buckets.is_empty());
    let mut buckets = 0;
    struct Count<'a>(&'a mut usize);
    impl TrieVisitor<u64, u64> for Count<'_> {
        fn bucket(&mut self, _: &LevelView, _: usize, c: BucketContent) {
            assert_eq!(c, BucketContent::Empty);
            *self.0 += 1;
        }
    }
    m.visit(true, &mut Count(&mut buckets));
    assert_eq!(buckets, 8);

    let two = id_map(1, 1);
    let mut buckets = 0;
    two.visit(true, &mut Count(&mut buckets));
    assert_eq!(buckets, 2);
}

#[test]
fn zero_width_is_rejected() {
    assert_eq!(
        TrieMap::<u64, u64>::new(Config::new(0, 3)).unwrap_err(),
        ConfigError::ZeroWidth
    );
}

#[test]
fn lookup_on_empty_map() {
    let m: TrieMap<u64, u64> = TrieMap::new(Config::default()).unwrap();
    for k in [0, 1, 99, u64::MAX] {
        assert_eq!(m.lookup(&k), None);
    }
    assert!(m.is_empty());
    assert_eq!(m.snapshot_keys().count(), 0);
}

#[test]
fn first_insert_closes_chain_on_level() {
    let m = id_map(3, 3);
    let out = m.insert_or_get(5, 50);
    assert!(out.inserted);
    let shape = Shape::capture(&m);
    assert_eq!(shape.chain("/", 5), Some((&[5u64][..], "/")));
    let stats = m.debug_stats().unwrap();
    assert_eq!(stats.bucket_update_counts[&(m.root_id(), 5)], 1);
    assert_eq!(stats.bucket_update_counts.len(), 1);
}

#[test]
fn appends_in_order_and_reinsert_returns_same_leaf() {
    let m = id_map(3, 3);
    let k1 = m.insert_or_get(5, 1);
    m.insert_or_get(13, 2);
    m.insert_or_get(21, 3);
    let shape = Shape::capture(&m);
    assert_eq!(shape.chain("/", 5), Some((&[5u64, 13, 21][..], "/")));

    let again = m.insert_or_get(5, 99);
    assert!(!again.inserted);
    assert_eq!(again.leaf, k1.leaf);
    assert_eq!(*again.leaf.value(), 1);
    assert_eq!(m.len(), 3);
    // tail appends do not touch the bucket again
    assert_eq!(m.debug_stats().unwrap().max_bucket_writes(), 1);
}

#[test]
fn fourth_collider_expands_bucket() {
    let m = id_map(3, 3);
    let keys = [5u64, 13, 21, 29];
    for k in keys {
        assert!(m.insert_or_get(k, k * 10).inserted);
    }
    let shape = Shape::capture(&m);
    assert_eq!(shape.deeper("/", 5), Some("/5"));
    for k in keys {
        assert_eq!(m.lookup(&k), Some(&(k * 10)));
        let b = KeyHash(k).chunk(1, 3);
        let (chain, term) = shape.chain("/5", b).unwrap();
        assert!(chain.contains(&k));
        assert_eq!(term, "/5");
    }
    let stats = m.debug_stats().unwrap();
    assert_eq!(stats.expansions, 1);
    assert_eq!(stats.bucket_update_counts[&(m.root_id(), 5)], 2);
    assert!(stats.max_bucket_writes() <= 2);
    assert!(validate(&m, None).is_clean());
}

#[test]
fn random_keys_match_replay_oracle() {
    let m: TrieMap<u64, u64> = TrieMap::new(Config::default().instrumented()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut oracle = HashMap::new();
    for _ in 0..10_000 {
        let k: u64 = rng.gen_range(0..8_000);
        let v: u64 = rng.gen();
        let out = m.insert_or_get(k, v);
        let expected = *oracle.entry(k).or_insert(v);
        assert_eq!(*out.leaf.value(), expected);
    }
    for (k, v) in &oracle {
        assert_eq!(m.lookup(k), Some(v));
    }
    assert_eq!(m.len(), oracle.len());
    let report = validate(&m, Some(&oracle));
    assert!(report.is_clean(), "{report}");
    assert!(report.max_bucket_writes <= 2);
}

#[test]
fn snapshot_is_exact_at_quiescence() {
    let m: TrieMap<u64, u64> = TrieMap::new(Config::new(2, 2)).unwrap();
    for k in 0..5_000u64 {
        m.insert_or_get(k, k + 1);
    }
    let pairs: Vec<(u64, u64)> = m.snapshot_keys().map(|(&k, &v)| (k, v)).collect();
    assert_eq!(pairs.len(), 5_000);
    let keys: HashSet<u64> = pairs.iter().map(|p| p.0).collect();
    assert_eq!(keys.len(), 5_000);
    assert!(pairs.iter().all(|&(k, v)| v == k + 1));
}

#[test]
fn stats_require_instrumentation() {
    let m: TrieMap<u64, u64> = TrieMap::new(Config::default()).unwrap();
    assert_eq!(m.debug_stats().unwrap_err(), StatsDisabled);
    let fresh = id_map(3, 3).debug_stats().unwrap();
    assert_eq!(fresh, Instrumentation::default());
}

#[test]
fn exhausted_hash_bits_grow_chain() {
    // 6 hash bits, 3 per level: depths 0..=2 exist, depth 2 has no bits left.
    let m: IdMap = TrieMap::new(Config::new(3, 3).with_hash_bits(6).instrumented()).unwrap();
    assert_eq!(m.config().max_depth(), 2);
    let keys: Vec<u64> = (0..20).map(|x| x << 6).collect();
    for &k in &keys {
        assert!(m.insert_or_get(k, k).inserted);
    }
    for &k in &keys {
        assert_eq!(m.lookup(&k), Some(&k));
    }
    let shape = Shape::capture(&m);
    let (chain, _) = shape.chain("/0/0", 0).unwrap();
    assert_eq!(chain.len(), 20);
    assert_eq!(shape.levels["/0/0"].depth, 2);
    let report = validate(&m, None);
    assert!(report.is_clean(), "{report}");
}

#[test]
fn width_one_threshold_one() {
    let m: TrieMap<u64, u64> = TrieMap::new(Config::new(1, 1)).unwrap();
    for k in 0..3_000u64 {
        m.insert_or_get(k, !k);
    }
    for k in 0..3_000u64 {
        assert_eq!(m.lookup(&k), Some(&!k));
    }
    assert!(validate(&m, None).is_clean());
}

#[test]
fn string_keys() {
    let m: TrieMap<String, usize> = TrieMap::new(Config::default()).unwrap();
    for i in 0..1_000 {
        m.insert_or_get(format!("key-{i}"), i);
    }
    assert_eq!(m.lookup(&"key-417".to_string()), Some(&417));
    assert_eq!(m.lookup(&"key-1000".to_string()), None);
}

#[test]
fn values_are_dropped_once() {
    use std::sync::atomic::{AtomicUsize, Ordering};
    use std::sync::Arc;
    struct Tracked(Arc<AtomicUsize>);
    impl Drop for Tracked {
        fn drop(&mut self) {
            self.0.fetch_add(1, Ordering::Relaxed);
        }
    }
    let drops = Arc::new(AtomicUsize::new(0));
    {
        let m: TrieMap<u64, Tracked> = TrieMap::new(Config::new(2, 2)).unwrap();
        for k in 0..500u64 {
            m.insert_or_get(k, Tracked(drops.clone()));
        }
        // duplicates are dropped immediately
        for k in 0..100u64 {
            m.insert_or_get(k, Tracked(drops.clone()));
        }
        assert_eq!(drops.load(Ordering::Relaxed), 100);
    }
    assert_eq!(drops.load(Ordering::Relaxed), 600);
}

#[test]
fn chains_never_exceed_threshold_above_max_depth() {
    let m = id_map(3, 3);
    for x in 0..4_000u64 {
        m.insert_or_get(x << 9, x);
    }
    let shape = Shape::capture(&m);
    for (name, level) in &shape.levels {
        for b in level.buckets.values() {
            if let BucketShape::Chain { keys, terminator } = b {
                assert!(keys.len() <= 3, "{name}");
                assert_eq!(terminator, name);
            }
        }
    }
}

mod props {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn matches_hashmap(
            w in 1u32..5,
            threshold in 1usize..5,
            keys in proptest::collection::vec(0u64..2_000, 0..400),
        ) {
            let m: TrieMap<u64, usize> =
                TrieMap::new(Config::new(w, threshold).instrumented()).unwrap();
            let mut oracle = HashMap::new();
            for (i, &k) in keys.iter().enumerate() {
                let out = m.insert_or_get(k, i);
                let first = *oracle.entry(k).or_insert(i);
                prop_assert_eq!(out.inserted, first == i);
                prop_assert_eq!(*out.leaf.value(), first);
            }
            let report = validate(&m, Some(&oracle));
            prop_assert!(report.is_clean(), "{}", report);
            let snap: HashMap<u64, usize> = m.snapshot_keys().map(|(&k, &v)| (k, v)).collect();
            prop_assert_eq!(snap, oracle);
        }

        #[test]
        fn identity_colliders_stay_valid(
            low in 0u64..512,
            highs in proptest::collection::hash_set(0u64..100_000, 1..300),
        ) {
            let m = id_map(3, 3);
            for &h in &highs {
                m.insert_or_get((h << 9) | low, h);
            }
            let oracle: HashMap<u64, u64> = highs.iter().map(|&h| ((h << 9) | low, h)).collect();
            let report = validate(&m, Some(&oracle));
            prop_assert!(report.is_clean(), "{}", report);
            prop_assert!(report.max_bucket_writes <= 2);
        }
    }
}
