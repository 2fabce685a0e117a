//! The lock-free hash trie map.
//!
//! Every bucket slot and every node's `next` slot holds either a node
//! reference or a level reference. A chain under a bucket of level `L` always
//! ends in a reference back to `L`; a traversal that ends anywhere else knows
//! the bucket is being expanded and continues one level deeper. New nodes are
//! only ever appended at the tail with a single CAS, so a bucket slot is
//! written at most twice: empty to first node, then to the deeper level once
//! its chain has been remapped.

mod hooks;
mod raw;
mod stats;
mod visit;

#[cfg(feature = "test-hooks")]
pub mod fixture;

use std::collections::HashSet;
use std::fmt;
use std::marker::PhantomData;
use std::ptr;
use std::sync::atomic::Ordering::{AcqRel, Acquire, Relaxed, Release};

#[cfg(feature = "test-hooks")]
use std::sync::Arc;

use smallvec::SmallVec;

use crate::config::{Config, ConfigError};
use crate::hash::{KeyHash, KeyHasher, MixHash};

pub use hooks::{PausePoint, ProtocolHook, UnknownPausePoint};
pub use stats::{Instrumentation, LevelId, StatsDisabled};
pub use visit::{BucketContent, ChainEnd, LevelView, NodeSite, Snapshot, TrieVisitor};

use raw::{same_level, Level, Node, Tagged, Target};
use stats::{Counters, StripedCounter};

type Chain<'a, K, V> = SmallVec<[&'a Node<K, V>; 8]>;

macro_rules! pause {
    ($map:expr, $point:expr) => {
        #[cfg(feature = "test-hooks")]
        {
            if let Some(h) = &$map.hook {
                h.reached($point);
            }
        }
    };
}

type Owned<K, V> = (Box<Node<K, V>>, Box<Level<K, V>>);

/// Insert-only concurrent map from `K` to `V`.
///
/// Keys are never removed and nodes are never freed while the map lives, so
/// references handed out by [`lookup`](Self::lookup) and
/// [`insert_or_get`](Self::insert_or_get) stay valid for the map's lifetime.
pub struct TrieMap<K, V, H = MixHash> {
    config: Config,
    hasher: H,
    root: *mut Level<K, V>,
    counters: Option<Box<Counters>>,
    count: StripedCounter,
    #[cfg(feature = "test-hooks")]
    hook: Option<Arc<dyn ProtocolHook>>,
    _owns: PhantomData<Owned<K, V>>,
}

// SAFETY: shared access only hands out `&K`/`&V` and moves `K`/`V` in from
// the inserting thread; all slot mutation goes through atomics.
unsafe impl<K: Send + Sync, V: Send + Sync, H: Send + Sync> Send for TrieMap<K, V, H> {}
unsafe impl<K: Send + Sync, V: Send + Sync, H: Send + Sync> Sync for TrieMap<K, V, H> {}

/// Reference to the chain node holding a key.
pub struct Leaf<'a, K, V> {
    node: &'a Node<K, V>,
}

impl<'a, K, V> Leaf<'a, K, V> {
    pub fn key(&self) -> &'a K {
        &self.node.key
    }

    pub fn value(&self) -> &'a V {
        &self.node.value
    }

    pub fn hash(&self) -> KeyHash {
        KeyHash(self.node.hash)
    }

    /// Address of the node; equal ids mean the same leaf.
    pub fn id(&self) -> usize {
        self.node as *const Node<K, V> as usize
    }
}

impl<K, V> Clone for Leaf<'_, K, V> {
    fn clone(&self) -> Self {
        *self
    }
}

impl<K, V> Copy for Leaf<'_, K, V> {}

impl<K, V> PartialEq for Leaf<'_, K, V> {
    fn eq(&self, other: &Self) -> bool {
        ptr::eq(self.node, other.node)
    }
}

impl<K, V> Eq for Leaf<'_, K, V> {}

impl<K: fmt::Debug, V: fmt::Debug> fmt::Debug for Leaf<'_, K, V> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Leaf")
            .field("key", &self.node.key)
            .field("value", &self.node.value)
            .finish()
    }
}

/// Result of a check/insert.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InsertOutcome<'a, K, V> {
    pub leaf: Leaf<'a, K, V>,
    /// True iff this call created the leaf.
    pub inserted: bool,
}

enum Expansion<'a, K, V> {
    Won(&'a Level<K, V>),
    Lost(Tagged<K, V>),
}

impl<K, V, H: Default> TrieMap<K, V, H> {
    pub fn new(config: Config) -> Result<Self, ConfigError> {
        Self::with_hasher(config, H::default())
    }
}

impl<K, V, H> TrieMap<K, V, H> {
    pub fn with_hasher(config: Config, hasher: H) -> Result<Self, ConfigError> {
        config.validate()?;
        let root = Level::alloc(
            0,
            ptr::null(),
            0,
            config.buckets_per_level(),
            config.instrument,
        );
        Ok(TrieMap {
            config,
            hasher,
            root,
            counters: config.instrument.then(Box::default),
            count: StripedCounter::default(),
            #[cfg(feature = "test-hooks")]
            hook: None,
            _owns: PhantomData,
        })
    }

    /// Installs a hook called at every [`PausePoint`].
    #[cfg(feature = "test-hooks")]
    pub fn with_hook(mut self, hook: Arc<dyn ProtocolHook>) -> Self {
        self.hook = Some(hook);
        self
    }

    pub fn config(&self) -> &Config {
        &self.config
    }

    /// Number of keys inserted so far. Exact at quiescence.
    pub fn len(&self) -> usize {
        self.count.sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn root_id(&self) -> LevelId {
        LevelId(self.root as usize)
    }

    pub fn debug_stats(&self) -> Result<Instrumentation, StatsDisabled> {
        let counters = self.counters.as_deref().ok_or(StatsDisabled)?;
        let mut out = Instrumentation {
            expansions: counters.expansions.load(Relaxed),
            cas_failures: counters.cas_failures.load(Relaxed),
            restarts: counters.restarts.load(Relaxed),
            cascades: counters.cascades.load(Relaxed),
            ..Instrumentation::default()
        };
        struct Collect<'o>(&'o mut Instrumentation);
        impl<K, V> TrieVisitor<K, V> for Collect<'_> {
            fn level(&mut self, level: &LevelView) {
                if let Some(writes) = &level.bucket_writes {
                    for (i, &n) in writes.iter().enumerate().filter(|(_, &n)| n > 0) {
                        self.0.bucket_update_counts.insert((level.id, i), n);
                    }
                }
            }
        }
        self.visit(true, &mut Collect(&mut out));
        Ok(out)
    }

    #[inline]
    fn root(&self) -> &Level<K, V> {
        // SAFETY: the root lives as long as the map.
        unsafe { &*self.root }
    }

    #[inline]
    fn bump(&self, pick: impl FnOnce(&Counters) -> &std::sync::atomic::AtomicU64) {
        if let Some(c) = self.counters.as_deref() {
            Counters::bump(pick(c));
        }
    }

    #[inline]
    fn width(&self) -> usize {
        self.config.buckets_per_level()
    }

    /// Where a traversal of `from` continues after meeting a reference to
    /// `seen`: the level one below `from` on the path to `seen`.
    ///
    /// A bucket that already references a deeper level points at exactly
    /// that child. A chain terminator may point further down when the node
    /// carrying it was pushed into a cascaded expansion; walking back up the
    /// `prev` references lands on the child of `from` that owns the key.
    ///
    /// `restart` marks a reference met at the end of a chain rather than in
    /// the bucket itself; only those are counted.
    fn resolve<'a>(
        &'a self,
        seen: &'a Level<K, V>,
        from: &'a Level<K, V>,
        restart: bool,
    ) -> &'a Level<K, V> {
        if restart {
            self.bump(|c| &c.restarts);
        }
        if seen.depth <= from.depth {
            debug_assert!(false, "slot references a shallower level");
            return self.root();
        }
        let mut level = seen;
        while level.depth > from.depth + 1 {
            // SAFETY: non-root levels always have a live parent.
            level = unsafe { &*level.prev };
        }
        level
    }

    /// Allocates a deeper level for `bucket` of `level` and tries to install it
    /// as the terminator of `tail`.
    fn expand_bucket<'a>(
        &'a self,
        level: &'a Level<K, V>,
        bucket: usize,
        tail: &'a Node<K, V>,
    ) -> Expansion<'a, K, V> {
        let next = Level::alloc(
            level.depth + 1,
            level,
            bucket,
            self.width(),
            self.config.instrument,
        );
        pause!(self, PausePoint::PreExpansionCas);
        match tail.next.compare_exchange(
            Tagged::level(level).0,
            Tagged::level(next).0,
            AcqRel,
            Acquire,
        ) {
            Ok(_) => {
                self.bump(|c| &c.expansions);
                pause!(self, PausePoint::PostExpansionCas);
                // SAFETY: published; lives as long as the map.
                Expansion::Won(unsafe { &*next })
            }
            Err(seen) => {
                // SAFETY: never published, so no other thread can hold it.
                drop(unsafe { Box::from_raw(next) });
                self.bump(|c| &c.cas_failures);
                Expansion::Lost(Tagged::from_raw(seen))
            }
        }
    }

    /// Moves every node of `chain` (the chain of `bucket` in `old` when the
    /// expansion CAS succeeded) into `new`, last node first, then points the
    /// bucket itself at `new`.
    fn remap_chain<'a>(
        &'a self,
        old: &'a Level<K, V>,
        bucket: usize,
        new: &'a Level<K, V>,
        chain: &[&'a Node<K, V>],
    ) {
        let to_new = Tagged::level(new).0;
        for i in (0..chain.len()).rev() {
            self.place(new, chain[i]);
            pause!(self, PausePoint::PostNodeRemap);
            if i > 0 {
                chain[i - 1].next.store(to_new, Release);
                pause!(self, PausePoint::PostChainBreak);
            }
        }
        pause!(self, PausePoint::PreBucketGray);
        old.buckets[bucket].store(to_new, Release);
        old.note_write(bucket);
        pause!(self, PausePoint::PostBucketGray);
    }

    /// Appends an already published node (being remapped) to the tail of its
    /// bucket at or below `start`.
    fn place<'a>(&'a self, start: &'a Level<K, V>, node: &'a Node<K, V>) {
        let w = self.config.w;
        let mut level = start;
        'levels: loop {
            let idx = level.bucket_of(node.hash, w);
            let mut slot = &level.buckets[idx];
            let mut cur = Tagged::from_raw(slot.load(Acquire));
            let mut chain: Chain<'a, K, V> = SmallVec::new();
            loop {
                // SAFETY: read from a slot of this map.
                match unsafe { cur.target() } {
                    Target::Node(n) => {
                        chain.push(n);
                        slot = &n.next;
                        cur = Tagged::from_raw(slot.load(Acquire));
                    }
                    Target::Level(l) if same_level(l, level) => {
                        if chain.len() >= self.config.threshold
                            && level.depth < self.config.max_depth()
                        {
                            let tail = chain[chain.len() - 1];
                            match self.expand_bucket(level, idx, tail) {
                                Expansion::Won(deeper) => {
                                    self.bump(|c| &c.cascades);
                                    self.remap_chain(level, idx, deeper, &chain);
                                    level = deeper;
                                    continue 'levels;
                                }
                                Expansion::Lost(seen) => {
                                    cur = seen;
                                    continue;
                                }
                            }
                        }
                        let close = Tagged::level(level).0;
                        if node.next.load(Relaxed) != close {
                            // Still the tail of the old chain, so no other
                            // thread writes this slot.
                            node.next.store(close, Release);
                        }
                        match slot.compare_exchange(
                            cur.0,
                            Tagged::node(node).0,
                            AcqRel,
                            Acquire,
                        ) {
                            Ok(_) => {
                                if chain.is_empty() {
                                    level.note_write(idx);
                                }
                                return;
                            }
                            Err(seen) => {
                                self.bump(|c| &c.cas_failures);
                                cur = Tagged::from_raw(seen);
                            }
                        }
                    }
                    Target::Level(other) => {
                        level = self.resolve(other, level, !chain.is_empty());
                        continue 'levels;
                    }
                }
            }
        }
    }

    /// Visits every level, bucket and node.
    ///
    /// With `follow_terminators` set, levels reachable only through a chain
    /// terminator (expansions still being remapped) are visited too; nodes
    /// in transit may then be reported twice. Without it only levels hanging
    /// off bucket slots are visited, which covers the whole map at quiescence.
    pub fn visit(&self, follow_terminators: bool, visitor: &mut impl TrieVisitor<K, V>) {
        visit::walk(self.root(), follow_terminators, visitor)
    }

    /// Every key/value pair reachable from the root.
    ///
    /// Keys whose insert completed before the call are always yielded. Under
    /// concurrent expansion a pair may be yielded more than once; at
    /// quiescence the enumeration is exact and duplicate-free.
    pub fn snapshot_keys(&self) -> Snapshot<'_, K, V> {
        Snapshot::new(self.root())
    }
}

impl<K: Eq, V, H: KeyHasher<K>> TrieMap<K, V, H> {
    #[inline]
    pub fn hash(&self, key: &K) -> KeyHash {
        KeyHash(self.hasher.hash_key(key) & self.config.hash_mask())
    }

    /// Value stored for `key`, if its insert has become visible.
    pub fn lookup(&self, key: &K) -> Option<&V> {
        self.find(key).map(|n| &n.value)
    }

    pub fn lookup_leaf(&self, key: &K) -> Option<Leaf<'_, K, V>> {
        self.find(key).map(|node| Leaf { node })
    }

    pub fn contains_key(&self, key: &K) -> bool {
        self.find(key).is_some()
    }

    fn find(&self, key: &K) -> Option<&Node<K, V>> {
        let hash = self.hash(key).0;
        let w = self.config.w;
        let mut level = self.root();
        'levels: loop {
            let mut cur = Tagged::from_raw(level.buckets[level.bucket_of(hash, w)].load(Acquire));
            let mut in_chain = false;
            loop {
                // SAFETY: read from a slot of this map.
                match unsafe { cur.target() } {
                    Target::Node(n) => {
                        if n.hash == hash && n.key == *key {
                            return Some(n);
                        }
                        cur = Tagged::from_raw(n.next.load(Acquire));
                        in_chain = true;
                    }
                    Target::Level(l) if same_level(l, level) => return None,
                    Target::Level(other) => {
                        level = self.resolve(other, level, in_chain);
                        continue 'levels;
                    }
                }
            }
        }
    }

    /// Check/insert: returns the leaf already holding `key`, or publishes a
    /// new leaf with `value`. When the key exists `value` is dropped.
    pub fn insert_or_get(&self, key: K, value: V) -> InsertOutcome<'_, K, V> {
        let hash = self.hash(&key).0;
        let w = self.config.w;
        let threshold = self.config.threshold;
        let max_depth = self.config.max_depth();
        let mut pending = Pending::Loose(key, value);
        let mut level = self.root();
        'levels: loop {
            let idx = level.bucket_of(hash, w);
            let mut slot = &level.buckets[idx];
            let mut cur = Tagged::from_raw(slot.load(Acquire));
            let mut chain: Chain<'_, K, V> = SmallVec::new();
            loop {
                // SAFETY: read from a slot of this map.
                match unsafe { cur.target() } {
                    Target::Node(n) => {
                        if n.hash == hash && n.key == *pending.key() {
                            return InsertOutcome {
                                leaf: Leaf { node: n },
                                inserted: false,
                            };
                        }
                        chain.push(n);
                        slot = &n.next;
                        cur = Tagged::from_raw(slot.load(Acquire));
                    }
                    Target::Level(l) if same_level(l, level) => {
                        if chain.len() >= threshold && level.depth < max_depth {
                            let tail = chain[chain.len() - 1];
                            match self.expand_bucket(level, idx, tail) {
                                Expansion::Won(deeper) => {
                                    self.remap_chain(level, idx, deeper, &chain);
                                    level = deeper;
                                    continue 'levels;
                                }
                                Expansion::Lost(seen) => {
                                    cur = seen;
                                    continue;
                                }
                            }
                        }
                        let node = pending.boxed(hash);
                        node.next.store(Tagged::level(level).0, Relaxed);
                        let raw: *const Node<K, V> = &**node;
                        match slot.compare_exchange(cur.0, Tagged::node(raw).0, AcqRel, Acquire) {
                            Ok(_) => {
                                if chain.is_empty() {
                                    level.note_write(idx);
                                }
                                self.count.incr();
                                let node = Box::leak(pending.take_box());
                                return InsertOutcome {
                                    leaf: Leaf { node },
                                    inserted: true,
                                };
                            }
                            Err(seen) => {
                                self.bump(|c| &c.cas_failures);
                                cur = Tagged::from_raw(seen);
                            }
                        }
                    }
                    Target::Level(other) => {
                        level = self.resolve(other, level, !chain.is_empty());
                        continue 'levels;
                    }
                }
            }
        }
    }
}

/// Key and value of an insert in progress; boxed into a node on the first
/// attempt to link it.
enum Pending<K, V> {
    Loose(K, V),
    Boxed(Box<Node<K, V>>),
    Taken,
}

impl<K, V> Pending<K, V> {
    #[inline]
    fn key(&self) -> &K {
        match self {
            Pending::Loose(k, _) => k,
            Pending::Boxed(n) => &n.key,
            Pending::Taken => unreachable!(),
        }
    }

    fn boxed(&mut self, hash: u64) -> &mut Box<Node<K, V>> {
        if let Pending::Loose(..) = self {
            let Pending::Loose(k, v) = std::mem::replace(self, Pending::Taken) else {
                unreachable!()
            };
            *self = Pending::Boxed(Box::new(Node::new(hash, k, v)));
        }
        match self {
            Pending::Boxed(b) => b,
            _ => unreachable!(),
        }
    }

    fn take_box(&mut self) -> Box<Node<K, V>> {
        match std::mem::replace(self, Pending::Taken) {
            Pending::Boxed(b) => b,
            _ => unreachable!(),
        }
    }
}

impl<K, V, H> Drop for TrieMap<K, V, H> {
    fn drop(&mut self) {
        // Exclusive access: no concurrent operations remain. A node can be
        // reachable from two chains only if a remap was interrupted, so
        // collect before freeing.
        #[derive(Default)]
        struct Owned {
            levels: Vec<usize>,
            nodes: HashSet<usize>,
        }
        impl<K, V> TrieVisitor<K, V> for Owned {
            fn level(&mut self, level: &LevelView) {
                self.levels.push(level.id.0);
            }
            fn node_ptr(&mut self, addr: usize) {
                self.nodes.insert(addr);
            }
        }
        let mut owned = Owned {
            levels: Vec::new(),
            nodes: HashSet::with_capacity(self.len()),
        };
        self.visit(true, &mut owned);
        for addr in owned.nodes {
            // SAFETY: every node was leaked from a Box exactly once.
            drop(unsafe { Box::from_raw(addr as *mut Node<K, V>) });
        }
        for addr in owned.levels {
            // SAFETY: each level is visited once and was leaked from a Box.
            drop(unsafe { Box::from_raw(addr as *mut Level<K, V>) });
        }
    }
}

impl<K, V, H> fmt::Debug for TrieMap<K, V, H> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TrieMap")
            .field("config", &self.config)
            .field("len", &self.len())
            .finish_non_exhaustive()
    }
}

#[cfg(test)]
mod tests;
