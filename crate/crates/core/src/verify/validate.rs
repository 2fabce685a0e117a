//! Quiescent structural checks of a [`TrieMap`].

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::hash::Hash;

use super::shape::level_name;
use crate::hash::{chunk_index, KeyHasher};
use crate::map::{BucketContent, ChainEnd, LevelId, LevelView, NodeSite, TrieMap, TrieVisitor};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ViolationCode {
    /// A chain does not end in a reference to its own level.
    ChainOpen,
    /// A node hangs under a bucket its hash does not select.
    WrongBucket,
    /// A chain above the deepest level is longer than the threshold.
    ChainTooLong,
    /// A key is reachable from more than one place.
    DuplicateKey,
    /// An expected key cannot be found by lookup.
    UnreachableKey,
    /// A bucket slot was written more than twice.
    BucketOverwrite,
    /// A level reference goes up, skips a depth, or names the wrong parent.
    DepthRegression,
    /// A reachable key is missing from the expected mapping or has another value.
    OracleMismatch,
}

impl ViolationCode {
    pub fn as_str(self) -> &'static str {
        match self {
            ViolationCode::ChainOpen => "CHAIN_OPEN",
            ViolationCode::WrongBucket => "WRONG_BUCKET",
            ViolationCode::ChainTooLong => "CHAIN_TOO_LONG",
            ViolationCode::DuplicateKey => "DUPLICATE_KEY",
            ViolationCode::UnreachableKey => "UNREACHABLE_KEY",
            ViolationCode::BucketOverwrite => "BUCKET_OVERWRITE",
            ViolationCode::DepthRegression => "DEPTH_REGRESSION",
            ViolationCode::OracleMismatch => "ORACLE_MISMATCH",
        }
    }
}

impl fmt::Display for ViolationCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub code: ViolationCode,
    /// `level[bucket]#position`, with levels named by bucket path.
    pub location: String,
    pub detail: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
    pub keys: usize,
    pub levels: usize,
    pub deepest_level: u32,
    /// Highest bucket write count seen; zero when not instrumented.
    pub max_bucket_writes: u32,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn codes(&self) -> Vec<ViolationCode> {
        self.violations.iter().map(|v| v.code).collect()
    }

    pub fn count(&self, code: ViolationCode) -> usize {
        self.violations.iter().filter(|v| v.code == code).count()
    }

    pub fn merge(&mut self, other: ValidationReport) {
        self.violations.extend(other.violations);
        self.keys += other.keys;
        self.levels += other.levels;
        self.deepest_level = self.deepest_level.max(other.deepest_level);
        self.max_bucket_writes = self.max_bucket_writes.max(other.max_bucket_writes);
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{} keys, {} levels, deepest {}, max bucket writes {}, {} violation(s)",
            self.keys,
            self.levels,
            self.deepest_level,
            self.max_bucket_writes,
            self.violations.len()
        )?;
        for v in &self.violations {
            writeln!(f, "  {} at {}: {}", v.code, v.location, v.detail)?;
        }
        Ok(())
    }
}

struct Checker<'m, K, V, H> {
    map: &'m TrieMap<K, V, H>,
    oracle: Option<&'m HashMap<K, V>>,
    report: ValidationReport,
    names: HashMap<LevelId, String>,
    /// child -> (parent, parent depth)
    parents: HashMap<LevelId, (LevelId, u32)>,
    seen: HashMap<K, String>,
}

impl<K, V, H> Checker<'_, K, V, H> {
    fn flag(&mut self, code: ViolationCode, location: String, detail: String) {
        self.report.violations.push(Violation {
            code,
            location,
            detail,
        });
    }

    fn name(&self, id: LevelId) -> String {
        self.names
            .get(&id)
            .cloned()
            .unwrap_or_else(|| format!("?{:#x}", id.0))
    }
}

impl<K, V, H> TrieVisitor<K, V> for Checker<'_, K, V, H>
where
    K: Eq + Hash + Clone + fmt::Debug,
    V: PartialEq + fmt::Debug,
    H: KeyHasher<K>,
{
    fn level(&mut self, level: &LevelView) {
        let name = level_name(&level.path);
        self.names.insert(level.id, name.clone());
        self.report.levels += 1;
        self.report.deepest_level = self.report.deepest_level.max(level.depth);
        let max_depth = self.map.config().max_depth();
        if level.depth > max_depth {
            self.flag(
                ViolationCode::DepthRegression,
                name.clone(),
                format!("depth {} beyond max depth {max_depth}", level.depth),
            );
        }
        if let Some(&(parent, parent_depth)) = self.parents.get(&level.id) {
            if level.prev != Some(parent) || level.depth != parent_depth + 1 {
                self.flag(
                    ViolationCode::DepthRegression,
                    name.clone(),
                    format!(
                        "depth {} / prev {:?} under parent at depth {parent_depth}",
                        level.depth, level.prev
                    ),
                );
            }
        }
        if let Some(writes) = &level.bucket_writes {
            for (i, &n) in writes.iter().enumerate() {
                self.report.max_bucket_writes = self.report.max_bucket_writes.max(n);
                if n > 2 {
                    self.flag(
                        ViolationCode::BucketOverwrite,
                        format!("{name}[{i}]"),
                        format!("{n} writes"),
                    );
                }
            }
        }
    }

    fn bucket(&mut self, level: &LevelView, index: usize, content: BucketContent) {
        if let BucketContent::Deeper { id, depth } = content {
            self.parents.insert(id, (level.id, level.depth));
            if depth != level.depth + 1 {
                let loc = format!("{}[{index}]", self.name(level.id));
                self.flag(
                    ViolationCode::DepthRegression,
                    loc,
                    format!("references depth {depth} from depth {}", level.depth),
                );
            }
        }
    }

    fn node(&mut self, site: &NodeSite, key: &K, value: &V) {
        self.report.keys += 1;
        let loc = format!("{}[{}]#{}", self.name(site.level), site.bucket, site.position);
        let hash = self.map.hash(key);
        let want = chunk_index(hash, site.depth, self.map.config().w);
        if want != site.bucket {
            self.flag(
                ViolationCode::WrongBucket,
                loc.clone(),
                format!("{key:?} belongs in bucket {want}"),
            );
        }
        if let Some(first) = self.seen.get(key) {
            let detail = format!("{key:?} also at {first}");
            self.flag(ViolationCode::DuplicateKey, loc.clone(), detail);
        } else {
            self.seen.insert(key.clone(), loc.clone());
        }
        if let Some(oracle) = self.oracle {
            match oracle.get(key) {
                None => self.flag(
                    ViolationCode::OracleMismatch,
                    loc,
                    format!("{key:?} was never inserted"),
                ),
                Some(v) if v != value => self.flag(
                    ViolationCode::OracleMismatch,
                    loc,
                    format!("{key:?} holds {value:?}, expected {v:?}"),
                ),
                Some(_) => {}
            }
        }
    }

    fn terminator(&mut self, end: &ChainEnd) {
        let loc = format!("{}[{}]", self.name(end.level), end.bucket);
        if !end.is_closed() {
            let detail = format!(
                "chain of {} ends at depth-{} level {}",
                end.length,
                end.target_depth,
                self.name(end.target)
            );
            self.flag(ViolationCode::ChainOpen, loc.clone(), detail);
        }
        let cfg = self.map.config();
        if end.depth < cfg.max_depth() && end.length > cfg.threshold {
            self.flag(
                ViolationCode::ChainTooLong,
                loc,
                format!("{} nodes, threshold {}", end.length, cfg.threshold),
            );
        }
    }
}

/// Checks chain closure, bucket placement, chain length, key uniqueness,
/// bucket write counts and level depths. With an oracle, also checks that
/// the reachable mapping equals it exactly and that every oracle key is
/// found by lookup. The map must be quiescent.
pub fn validate<K, V, H>(map: &TrieMap<K, V, H>, oracle: Option<&HashMap<K, V>>) -> ValidationReport
where
    K: Eq + Hash + Clone + fmt::Debug,
    V: PartialEq + fmt::Debug,
    H: KeyHasher<K>,
{
    let mut checker = Checker {
        map,
        oracle,
        report: ValidationReport::default(),
        names: HashMap::new(),
        parents: HashMap::new(),
        seen: HashMap::new(),
    };
    map.visit(false, &mut checker);
    let mut report = checker.report;
    if let Some(oracle) = oracle {
        let reached: HashSet<&K> = checker.seen.keys().collect();
        for k in oracle.keys() {
            if map.lookup(k).is_none() {
                report.violations.push(Violation {
                    code: ViolationCode::UnreachableKey,
                    location: "lookup".into(),
                    detail: format!("{k:?} not found"),
                });
            } else if !reached.contains(k) {
                report.violations.push(Violation {
                    code: ViolationCode::UnreachableKey,
                    location: "walk".into(),
                    detail: format!("{k:?} found by lookup but not by traversal"),
                });
            }
        }
    }
    report
}
