//! Deliberately broken maps: each corruption yields exactly its own code.

use lfht::hash::IdentityHash;
use lfht::verify::conformance::{exactly, fixture_base_is_clean, violation_fixtures};
use lfht::verify::{validate, ViolationCode};
use lfht::{Config, TrieMap};

type IdMap = TrieMap<u64, u64, IdentityHash>;

/// Root bucket 1 expanded into "/1", root bucket 2 holds key 2 alone.
fn base() -> IdMap {
    let m: IdMap = TrieMap::new(Config::new(3, 3).instrumented()).unwrap();
    for k in [1, 9, 17, 25, 2] {
        m.insert_or_get(k, k);
    }
    let r = validate(&m, None);
    assert!(r.is_clean(), "{r}");
    m
}

#[test]
fn each_fixture_yields_its_code() {
    assert!(fixture_base_is_clean());
    let fixtures = violation_fixtures();
    assert_eq!(fixtures.len(), 3);
    for (code, report) in &fixtures {
        assert!(exactly(*code, report), "{code}: {report}");
    }
}

#[test]
fn tail_on_foreign_level_is_chain_open() {
    let m = base();
    assert!(m.fixture_retarget_tail(&2, &9));
    let r = validate(&m, None);
    assert_eq!(r.codes(), vec![ViolationCode::ChainOpen], "{r}");
    assert_eq!(r.count(ViolationCode::ChainOpen), 1);
}

#[test]
fn moved_chain_is_wrong_bucket() {
    let m = base();
    assert!(m.fixture_move_chain(&[], 2, 3));
    let r = validate(&m, None);
    assert_eq!(r.codes(), vec![ViolationCode::WrongBucket], "{r}");
    assert_eq!(r.count(ViolationCode::WrongBucket), 1);
}

#[test]
fn unchecked_append_is_chain_too_long() {
    let m = base();
    for k in [10, 18] {
        m.insert_or_get(k, k);
    }
    // 2, 10, 18 fill root bucket 2; a fourth plain insert would expand it
    assert!(m.fixture_append_unchecked(34, 34));
    let r = validate(&m, None);
    assert_eq!(r.codes(), vec![ViolationCode::ChainTooLong], "{r}");
    assert_eq!(r.count(ViolationCode::ChainTooLong), 1);
}

#[test]
fn third_write_is_bucket_overwrite() {
    let m = base();
    assert!(m.fixture_bump_writes(&[], 1, 1));
    let r = validate(&m, None);
    assert_eq!(r.codes(), vec![ViolationCode::BucketOverwrite], "{r}");
    assert_eq!(r.max_bucket_writes, 3);
}

#[test]
fn fixtures_refuse_bad_targets() {
    let m = base();
    assert!(!m.fixture_move_chain(&[], 4, 5));
    assert!(!m.fixture_move_chain(&[], 2, 1));
    assert!(!m.fixture_move_chain(&[7], 0, 1));
    assert!(!m.fixture_append_unchecked(2, 0));
    assert!(!m.fixture_append_unchecked(5, 5));
    assert!(!m.fixture_retarget_tail(&99, &2));
    assert!(validate(&m, None).is_clean());
}

#[test]
fn oracle_catches_missing_and_extra_keys() {
    let m = base();
    let mut oracle: std::collections::HashMap<u64, u64> =
        [1, 9, 17, 25, 2].into_iter().map(|k| (k, k)).collect();
    assert!(validate(&m, Some(&oracle)).is_clean());
    oracle.insert(3, 3);
    let r = validate(&m, Some(&oracle));
    assert_eq!(r.codes(), vec![ViolationCode::UnreachableKey], "{r}");
    oracle.remove(&3);
    oracle.insert(2, 7);
    oracle.remove(&25);
    let r = validate(&m, Some(&oracle));
    assert_eq!(r.count(ViolationCode::OracleMismatch), 2, "{r}");
    assert_eq!(r.violations.len(), 2);
}
