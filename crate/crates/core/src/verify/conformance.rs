//! Scripted remap sequences with the expected shape at every step, and the
//! constructed-violation fixtures. Keys hash to themselves; with w = 3 the
//! bucket at depth d is bits 3d..3d+3 of the key.

use std::collections::HashMap;

use super::probe::{interleave_probe, Script, Trace, TraceEvent};
use super::validate::{validate, ValidationReport, ViolationCode};
use crate::config::Config;
use crate::hash::IdentityHash;
use crate::map::{PausePoint, TrieMap};

/// Mismatches between a trace and the expected step shapes.
#[derive(Debug, Default)]
pub struct Mismatches(pub Vec<String>);

impl Mismatches {
    fn check(&mut self, ok: bool, what: impl FnOnce() -> String) {
        if !ok {
            self.0.push(what());
        }
    }

    fn chain(&mut self, t: &Trace, label: &str, level: &str, bucket: usize, keys: &[u64], term: &str) {
        let got = t.shapes.get(label).and_then(|s| s.chain(level, bucket));
        self.check(got == Some((keys, term)), || {
            format!("{label}: {level}[{bucket}] is {got:?}, expected {keys:?} -> {term}")
        });
    }

    fn deeper(&mut self, t: &Trace, label: &str, level: &str, bucket: usize, child: &str) {
        let got = t.shapes.get(label).and_then(|s| s.deeper(level, bucket));
        self.check(got == Some(child), || {
            format!("{label}: {level}[{bucket}] references {got:?}, expected {child}")
        });
    }

    fn empty(&mut self, t: &Trace, label: &str, level: &str, bucket: usize) {
        let ok = t.shapes.get(label).is_some_and(|s| s.is_empty_bucket(level, bucket));
        self.check(ok, || format!("{label}: {level}[{bucket}] is not empty"));
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

pub fn lookups(t: &Trace) -> Vec<(u64, bool, u64)> {
    t.events
        .iter()
        .filter_map(|e| match *e {
            TraceEvent::Looked {
                key,
                found,
                restarts,
            } => Some((key, found, restarts)),
            _ => None,
        })
        .collect()
}

fn run(preload: &[u64], script: &str) -> Result<Trace, String> {
    let script = Script::parse(script).map_err(|e| e.to_string())?;
    interleave_probe(Config::new(3, 3), preload, &script).map_err(|e| e.to_string())
}

fn common_tail(m: &mut Mismatches, t: &Trace, keys: usize, depth: u32) {
    m.check(t.final_report.is_clean(), || format!("final state: {}", t.final_report));
    m.check(t.final_report.keys == keys, || {
        format!("final state holds {} keys, expected {keys}", t.final_report.keys)
    });
    m.check(t.final_report.deepest_level == depth, || {
        format!("deepest level {}, expected {depth}", t.final_report.deepest_level)
    });
    m.check(t.final_report.max_bucket_writes <= 2, || {
        format!("a bucket was written {} times", t.final_report.max_bucket_writes)
    });
    let placed = t.final_shape.chain("/0", 7) == Some((&[56u64][..], "/0"));
    m.check(placed, || "driven key 56 not in /0[7]".into());
    for (key, found, _) in lookups(t) {
        m.check(found, || format!("lookup {key} missed"));
    }
}

/// K1 = 16, K2 = 40, K3 = 104 share root bucket 0 (E_k). At depth 1 K1 goes
/// to bucket 2 (E_m) and K2, K3 to bucket 5 (E_n). 56 is the fourth
/// collider and triggers the expansion; 168 (K4) and 80 (K5) arrive while
/// the chain is being remapped.
pub const SECOND_LEVEL_PRELOAD: [u64; 3] = [16, 40, 104];
pub const SECOND_LEVEL_SCRIPT: &str = "
spawn 56
await pre-expansion-cas
await post-expansion-cas
capture b
lookup 104
await post-node-remap
capture c
await post-chain-break
capture d
lookup 104
insert 168
await post-node-remap
capture e
await post-chain-break
capture f
insert 80
await post-node-remap
capture g
await pre-bucket-gray
lookup 16
await post-bucket-gray
capture h
finish
";

pub fn second_level_remap() -> Result<(Trace, Mismatches), String> {
    let t = run(&SECOND_LEVEL_PRELOAD, SECOND_LEVEL_SCRIPT)?;
    let mut m = Mismatches::default();

    // (b) the tail references the new level, nothing moved yet
    m.chain(&t, "b", "/", 0, &[16, 40, 104], "/0");
    for b in 0..8 {
        m.empty(&t, "b", "/0", b);
    }
    // (c) K3 linked into E_n; the original chain is untouched
    m.chain(&t, "c", "/0", 5, &[104], "/0");
    m.chain(&t, "c", "/", 0, &[16, 40, 104], "/0");
    // (d) K2 no longer reaches K3
    m.chain(&t, "d", "/", 0, &[16, 40], "/0");
    m.chain(&t, "d", "/0", 5, &[104], "/0");
    // (e) K4 appended to E_n before K2 arrives
    m.chain(&t, "e", "/0", 5, &[104, 168, 40], "/0");
    m.chain(&t, "e", "/", 0, &[16, 40], "/0");
    // (f) K1 is the only node left in E_k
    m.chain(&t, "f", "/", 0, &[16], "/0");
    m.empty(&t, "f", "/0", 2);
    // (g) K5 landed in E_m first, K1 after it
    m.chain(&t, "g", "/0", 2, &[80, 16], "/0");
    m.chain(&t, "g", "/", 0, &[16], "/0");
    // (h) E_k references the second level
    m.deeper(&t, "h", "/", 0, "/0");
    m.chain(&t, "h", "/0", 5, &[104, 168, 40], "/0");
    m.chain(&t, "h", "/0", 2, &[80, 16], "/0");
    m.empty(&t, "h", "/0", 7);

    use PausePoint::*;
    let want = [
        PreExpansionCas,
        PostExpansionCas,
        PostNodeRemap,
        PostChainBreak,
        PostNodeRemap,
        PostChainBreak,
        PostNodeRemap,
        PreBucketGray,
        PostBucketGray,
    ];
    m.check(t.pauses() == want, || format!("pause sequence {:?}", t.pauses()));
    // after (d) K3 is only reachable by restarting on the second level
    let restarted = lookups(&t).get(1).is_some_and(|&(k, _, r)| k == 104 && r >= 1);
    m.check(restarted, || "lookup of K3 after (d) did not restart".into());
    common_tail(&mut m, &t, 6, 1);
    Ok((t, m))
}

/// K1 = 16 goes to E_m = /0 bucket 2 as before. K2 = 40 and K3 = 552 both go
/// to E_n = /0 bucket 5 and on to /0/5 bucket 0 (E_z). While the remapper is
/// paused right after its expansion CAS, 232, 296 and 424 (K7) fill E_n up
/// to the threshold and 80 goes to E_m.
pub const THIRD_LEVEL_PRELOAD: [u64; 3] = [16, 40, 552];
pub const THIRD_LEVEL_SCRIPT: &str = "
spawn 56
await pre-expansion-cas
await post-expansion-cas
insert 232
insert 80
insert 296
insert 424
capture a
await pre-expansion-cas
await post-expansion-cas
capture a-expanded
run-to post-bucket-gray
capture b
lookup 424
await post-node-remap
capture k3-placed
lookup 552
lookup 40
lookup 16
lookup 424
await post-chain-break
await post-node-remap
await post-chain-break
capture c
lookup 424
await post-node-remap
await pre-bucket-gray
await post-bucket-gray
capture d
finish
";

pub fn third_level_remap() -> Result<(Trace, Mismatches), String> {
    let t = run(&THIRD_LEVEL_PRELOAD, THIRD_LEVEL_SCRIPT)?;
    let mut m = Mismatches::default();

    // (a) E_n already holds a threshold's worth of nodes
    m.chain(&t, "a", "/0", 5, &[232, 296, 424], "/0");
    m.chain(&t, "a", "/0", 2, &[80], "/0");
    m.chain(&t, "a", "/", 0, &[16, 40, 552], "/0");
    m.chain(&t, "a-expanded", "/0", 5, &[232, 296, 424], "/0/5");
    // (b) E_n is gray and its nodes live in the third level; K3 not moved
    m.deeper(&t, "b", "/0", 5, "/0/5");
    m.chain(&t, "b", "/0/5", 3, &[232], "/0/5");
    m.chain(&t, "b", "/0/5", 4, &[296], "/0/5");
    m.chain(&t, "b", "/0/5", 6, &[424], "/0/5");
    m.empty(&t, "b", "/0/5", 0);
    m.chain(&t, "b", "/", 0, &[16, 40, 552], "/0");
    let depth = t.shapes.get("b").and_then(|s| s.levels.get("/0/5")).map(|l| l.depth);
    m.check(depth == Some(2), || format!("/0/5 at depth {depth:?}"));
    // K3 in E_z; while it is still the tail of E_k its terminator reaches
    // two levels down
    m.chain(&t, "k3-placed", "/0/5", 0, &[552], "/0/5");
    m.chain(&t, "k3-placed", "/", 0, &[16, 40, 552], "/0/5");
    // (c) K3 and K2 in E_z, K1 still closes on the second level
    m.chain(&t, "c", "/0/5", 0, &[552, 40], "/0/5");
    m.chain(&t, "c", "/", 0, &[16], "/0");
    // (d) end of the remap
    m.deeper(&t, "d", "/", 0, "/0");
    m.deeper(&t, "d", "/0", 5, "/0/5");
    m.chain(&t, "d", "/0", 2, &[80, 16], "/0");
    m.chain(&t, "d", "/0/5", 0, &[552, 40], "/0/5");

    let looked = lookups(&t);
    m.check(looked.len() == 6, || format!("{} lookups recorded", looked.len()));
    // K7 reached by running off the end of E_k onto the third level
    let restarted = looked.get(4).is_some_and(|&(k, _, r)| k == 424 && r >= 1);
    m.check(restarted, || "lookup of K7 through E_k did not restart".into());
    common_tail(&mut m, &t, 8, 2);
    Ok((t, m))
}

type IdMap = TrieMap<u64, u64, IdentityHash>;

/// Root bucket 1 expanded into "/1", root bucket 2 holds key 2 alone.
fn fixture_base() -> IdMap {
    let m: IdMap = TrieMap::new(Config::new(3, 3).instrumented()).expect("valid config");
    for k in [1, 9, 17, 25, 2] {
        m.insert_or_get(k, k);
    }
    m
}

/// Each constructed corruption with the code it is meant to produce and the
/// validator's report on it.
pub fn violation_fixtures() -> Vec<(ViolationCode, ValidationReport)> {
    let mut out = Vec::new();

    // tail of root bucket 2 pointed at the level under root bucket 1
    let m = fixture_base();
    assert!(m.fixture_retarget_tail(&2, &9));
    out.push((ViolationCode::ChainOpen, validate(&m, None)));

    // chain of root bucket 2 moved to bucket 3
    let m = fixture_base();
    assert!(m.fixture_move_chain(&[], 2, 3));
    out.push((ViolationCode::WrongBucket, validate(&m, None)));

    // a fourth node in a root chain without expanding
    let m = fixture_base();
    for k in [10, 18] {
        m.insert_or_get(k, k);
    }
    assert!(m.fixture_append_unchecked(34, 34));
    out.push((ViolationCode::ChainTooLong, validate(&m, None)));

    out
}

/// True when the report holds exactly one violation, of the given code.
pub fn exactly(code: ViolationCode, report: &ValidationReport) -> bool {
    report.codes() == [code]
}

pub fn fixture_base_is_clean() -> bool {
    let m = fixture_base();
    let oracle: HashMap<u64, u64> = [1, 9, 17, 25, 2].into_iter().map(|k| (k, k)).collect();
    validate(&m, Some(&oracle)).is_clean()
}
