//! Read-only traversal of the whole trie.

use std::collections::HashSet;
use std::sync::atomic::Ordering::{Acquire, Relaxed};

use super::raw::{same_level, Level, Node, Tagged, Target};
use super::stats::LevelId;
use crate::hash::KeyHash;

/// One hash level as seen by a visitor.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LevelView {
    pub id: LevelId,
    pub depth: u32,
    pub prev: Option<LevelId>,
    /// Bucket indices from the root down to this level; empty for the root.
    pub path: Vec<usize>,
    pub bucket_writes: Option<Vec<u32>>,
}

impl LevelView {
    fn of<K, V>(level: &Level<K, V>) -> Self {
        let mut path = Vec::with_capacity(level.depth as usize);
        let mut l = level;
        while !l.prev.is_null() {
            path.push(l.parent_bucket);
            // SAFETY: parents outlive their children.
            l = unsafe { &*l.prev };
        }
        path.reverse();
        LevelView {
            id: LevelId(level.as_ptr() as usize),
            depth: level.depth,
            prev: (!level.prev.is_null()).then_some(LevelId(level.prev as usize)),
            path,
            bucket_writes: level
                .writes
                .as_ref()
                .map(|w| w.iter().map(|c| c.load(Relaxed)).collect()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BucketContent {
    Empty,
    /// Head of a node chain; the nodes and terminator follow as events.
    Chain,
    /// The bucket has been expanded into a deeper level.
    Deeper { id: LevelId, depth: u32 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NodeSite {
    pub level: LevelId,
    pub depth: u32,
    pub bucket: usize,
    /// Zero-based position in the chain.
    pub position: usize,
    pub hash: KeyHash,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChainEnd {
    pub level: LevelId,
    pub depth: u32,
    pub bucket: usize,
    pub length: usize,
    pub target: LevelId,
    pub target_depth: u32,
}

impl ChainEnd {
    pub fn is_closed(&self) -> bool {
        self.target == self.level
    }
}

/// Callbacks for [`TrieMap::visit`](super::TrieMap::visit). All methods
/// default to doing nothing.
pub trait TrieVisitor<K, V> {
    fn level(&mut self, _level: &LevelView) {}
    fn bucket(&mut self, _level: &LevelView, _index: usize, _content: BucketContent) {}
    fn node(&mut self, _site: &NodeSite, _key: &K, _value: &V) {}
    fn terminator(&mut self, _end: &ChainEnd) {}
    #[doc(hidden)]
    fn node_ptr(&mut self, _addr: usize) {}
}

fn id<K, V>(l: &Level<K, V>) -> LevelId {
    LevelId(l.as_ptr() as usize)
}

/// Queues `target` and the levels between it and `from`.
fn discover<'a, K, V>(
    target: &'a Level<K, V>,
    from: &Level<K, V>,
    seen: &mut HashSet<usize>,
    stack: &mut Vec<&'a Level<K, V>>,
) {
    let mut l = target;
    while l.depth > from.depth {
        if seen.insert(l.as_ptr() as usize) {
            stack.push(l);
        }
        if l.prev.is_null() {
            break;
        }
        // SAFETY: parents outlive their children.
        l = unsafe { &*l.prev };
    }
}

pub(crate) fn walk<K, V>(
    root: &Level<K, V>,
    follow_terminators: bool,
    v: &mut impl TrieVisitor<K, V>,
) {
    let mut seen = HashSet::new();
    seen.insert(root.as_ptr() as usize);
    let mut stack = vec![root];
    while let Some(level) = stack.pop() {
        let view = LevelView::of(level);
        v.level(&view);
        for (idx, bucket) in level.buckets.iter().enumerate() {
            let word = Tagged::<K, V>::from_raw(bucket.load(Acquire));
            // SAFETY: read from a slot of a live map.
            match unsafe { word.target() } {
                Target::Level(l) if same_level(l, level) => {
                    v.bucket(&view, idx, BucketContent::Empty)
                }
                Target::Level(d) => {
                    v.bucket(
                        &view,
                        idx,
                        BucketContent::Deeper {
                            id: id(d),
                            depth: d.depth,
                        },
                    );
                    discover(d, level, &mut seen, &mut stack);
                }
                Target::Node(head) => {
                    v.bucket(&view, idx, BucketContent::Chain);
                    let mut node: &Node<K, V> = head;
                    let mut position = 0;
                    loop {
                        v.node(
                            &NodeSite {
                                level: view.id,
                                depth: level.depth,
                                bucket: idx,
                                position,
                                hash: KeyHash(node.hash),
                            },
                            &node.key,
                            &node.value,
                        );
                        v.node_ptr(node as *const Node<K, V> as usize);
                        position += 1;
                        let next = Tagged::<K, V>::from_raw(node.next.load(Acquire));
                        // SAFETY: as above.
                        match unsafe { next.target() } {
                            Target::Node(n) => node = n,
                            Target::Level(t) => {
                                v.terminator(&ChainEnd {
                                    level: view.id,
                                    depth: level.depth,
                                    bucket: idx,
                                    length: position,
                                    target: id(t),
                                    target_depth: t.depth,
                                });
                                if follow_terminators && !same_level(t, level) {
                                    discover(t, level, &mut seen, &mut stack);
                                }
                                break;
                            }
                        }
                    }
                }
            }
        }
    }
}

/// Iterator returned by [`TrieMap::snapshot_keys`](super::TrieMap::snapshot_keys).
pub struct Snapshot<'a, K, V> {
    stack: Vec<&'a Level<K, V>>,
    seen: HashSet<usize>,
    level: Option<&'a Level<K, V>>,
    index: usize,
    node: Option<&'a Node<K, V>>,
}

impl<'a, K, V> Snapshot<'a, K, V> {
    pub(crate) fn new(root: &'a Level<K, V>) -> Self {
        let mut seen = HashSet::new();
        seen.insert(root.as_ptr() as usize);
        Snapshot {
            stack: vec![root],
            seen,
            level: None,
            index: 0,
            node: None,
        }
    }
}

impl<'a, K, V> Iterator for Snapshot<'a, K, V> {
    type Item = (&'a K, &'a V);

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            if let Some(node) = self.node {
                let level = self.level.expect("chain without level");
                let next = Tagged::<K, V>::from_raw(node.next.load(Acquire));
                // SAFETY: read from a slot of a live map.
                match unsafe { next.target() } {
                    Target::Node(n) => self.node = Some(n),
                    Target::Level(t) => {
                        self.node = None;
                        if !same_level(t, level) {
                            discover(t, level, &mut self.seen, &mut self.stack);
                        }
                    }
                }
                return Some((&node.key, &node.value));
            }
            let level = match self.level {
                Some(l) if self.index < l.buckets.len() => l,
                _ => {
                    self.level = Some(self.stack.pop()?);
                    self.index = 0;
                    continue;
                }
            };
            let word = Tagged::<K, V>::from_raw(level.buckets[self.index].load(Acquire));
            self.index += 1;
            // SAFETY: as above.
            match unsafe { word.target() } {
                Target::Level(l) if same_level(l, level) => {}
                Target::Level(d) => discover(d, level, &mut self.seen, &mut self.stack),
                Target::Node(n) => self.node = Some(n),
            }
        }
    }
}
