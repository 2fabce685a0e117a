//! Structural picture of a map: which keys sit in which bucket chain and
//! where every chain and bucket points. Levels are named by their bucket
//! path from the root (`/`, `/0`, `/0/5`, ...).

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use crate::map::{BucketContent, ChainEnd, LevelId, LevelView, NodeSite, TrieMap, TrieVisitor};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BucketShape<K> {
    Chain { keys: Vec<K>, terminator: String },
    Deeper(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LevelShape<K> {
    pub depth: u32,
    /// Non-empty buckets only.
    pub buckets: BTreeMap<usize, BucketShape<K>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Shape<K> {
    pub levels: BTreeMap<String, LevelShape<K>>,
}

pub fn level_name(path: &[usize]) -> String {
    if path.is_empty() {
        "/".to_string()
    } else {
        path.iter().map(|b| format!("/{b}")).collect()
    }
}

enum Pending<K> {
    Chain(Vec<K>, LevelId),
    Deeper(LevelId),
}

struct Capture<K> {
    names: HashMap<LevelId, String>,
    depths: HashMap<LevelId, u32>,
    buckets: Vec<(LevelId, usize, Pending<K>)>,
    open: Vec<K>,
}

impl<K: Clone, V> TrieVisitor<K, V> for Capture<K> {
    fn level(&mut self, level: &LevelView) {
        self.names.insert(level.id, level_name(&level.path));
        self.depths.insert(level.id, level.depth);
    }

    fn bucket(&mut self, level: &LevelView, index: usize, content: BucketContent) {
        if let BucketContent::Deeper { id, .. } = content {
            self.buckets.push((level.id, index, Pending::Deeper(id)));
        }
    }

    fn node(&mut self, _site: &NodeSite, key: &K, _value: &V) {
        self.open.push(key.clone());
    }

    fn terminator(&mut self, end: &ChainEnd) {
        let keys = std::mem::take(&mut self.open);
        self.buckets
            .push((end.level, end.bucket, Pending::Chain(keys, end.target)));
    }
}

impl<K: Clone> Shape<K> {
    /// Captures every level, including ones only reachable through chain
    /// terminators while an expansion is in progress.
    pub fn capture<V, H>(map: &TrieMap<K, V, H>) -> Self {
        let mut cap = Capture {
            names: HashMap::new(),
            depths: HashMap::new(),
            buckets: Vec::new(),
            open: Vec::new(),
        };
        map.visit(true, &mut cap);
        let name = |id: &LevelId| {
            cap.names
                .get(id)
                .cloned()
                .unwrap_or_else(|| format!("?{:#x}", id.0))
        };
        let mut levels: BTreeMap<String, LevelShape<K>> = cap
            .names
            .iter()
            .map(|(id, n)| {
                (
                    n.clone(),
                    LevelShape {
                        depth: cap.depths[id],
                        buckets: BTreeMap::new(),
                    },
                )
            })
            .collect();
        for (level, index, content) in cap.buckets {
            let shape = match content {
                Pending::Chain(keys, target) => BucketShape::Chain {
                    keys,
                    terminator: name(&target),
                },
                Pending::Deeper(id) => BucketShape::Deeper(name(&id)),
            };
            levels
                .get_mut(&name(&level))
                .expect("bucket of unvisited level")
                .buckets
                .insert(index, shape);
        }
        Shape { levels }
    }
}

impl<K> Shape<K> {
    pub fn bucket(&self, level: &str, index: usize) -> Option<&BucketShape<K>> {
        self.levels.get(level)?.buckets.get(&index)
    }

    /// Keys and terminator of a chain bucket.
    pub fn chain(&self, level: &str, index: usize) -> Option<(&[K], &str)> {
        match self.bucket(level, index)? {
            BucketShape::Chain { keys, terminator } => Some((keys, terminator)),
            BucketShape::Deeper(_) => None,
        }
    }

    /// Level a bucket has been expanded into.
    pub fn deeper(&self, level: &str, index: usize) -> Option<&str> {
        match self.bucket(level, index)? {
            BucketShape::Deeper(l) => Some(l),
            BucketShape::Chain { .. } => None,
        }
    }

    pub fn is_empty_bucket(&self, level: &str, index: usize) -> bool {
        self.levels.contains_key(level) && self.bucket(level, index).is_none()
    }
}

impl<K: fmt::Debug> fmt::Display for Shape<K> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (name, level) in &self.levels {
            writeln!(f, "{name} (depth {})", level.depth)?;
            for (i, b) in &level.buckets {
                match b {
                    BucketShape::Chain { keys, terminator } => {
                        writeln!(f, "  [{i}] {keys:?} -> {terminator}")?
                    }
                    BucketShape::Deeper(l) => writeln!(f, "  [{i}] => {l}")?,
                }
            }
        }
        Ok(())
    }
}
