//! Deliberate corruption of a quiescent map, for exercising the validator.
//! None of these respect the insertion protocol.

use std::sync::atomic::Ordering::{Acquire, Relaxed, Release};

use super::raw::{same_level, Level, Node, Tagged, Target};
use super::TrieMap;
use crate::hash::KeyHasher;

/// Level, bucket index, and tail node of a chain.
type Located<'a, K, V> = (&'a Level<K, V>, usize, &'a Node<K, V>);

impl<K, V, H> TrieMap<K, V, H> {
    fn level_at(&self, path: &[usize]) -> Option<&Level<K, V>> {
        let mut level = self.root();
        for &b in path {
            // SAFETY: read from a slot of this map.
            match unsafe { Tagged::<K, V>::from_raw(level.buckets[b].load(Acquire)).target() } {
                Target::Level(d) if !same_level(d, level) => level = d,
                _ => return None,
            }
        }
        Some(level)
    }

    /// Moves the chain of bucket `from` to the empty bucket `to` of the level
    /// at `path`. Returns false if the buckets are not in that state.
    pub fn fixture_move_chain(&self, path: &[usize], from: usize, to: usize) -> bool {
        let Some(level) = self.level_at(path) else { return false };
        let empty = Tagged::level(level).0;
        let head = level.buckets[from].load(Acquire);
        if head == empty || head & 1 == 1 || level.buckets[to].load(Acquire) != empty {
            return false;
        }
        level.buckets[to].store(head, Release);
        level.buckets[from].store(empty, Release);
        true
    }

    /// Adds `n` to the recorded write count of a bucket.
    pub fn fixture_bump_writes(&self, path: &[usize], bucket: usize, n: u32) -> bool {
        match self.level_at(path).and_then(|l| l.writes.as_ref()) {
            Some(w) => {
                w[bucket].fetch_add(n, Relaxed);
                true
            }
            None => false,
        }
    }
}

impl<K: Eq, V, H: KeyHasher<K>> TrieMap<K, V, H> {
    /// Level and bucket whose chain holds `key`, plus the chain tail.
    fn locate(&self, key: &K) -> Option<Located<'_, K, V>> {
        let hash = self.hash(key).0;
        let mut level = self.root();
        loop {
            let idx = level.bucket_of(hash, self.config.w);
            // SAFETY: read from a slot of this map.
            let mut node = match unsafe {
                Tagged::<K, V>::from_raw(level.buckets[idx].load(Acquire)).target()
            } {
                Target::Node(n) => n,
                Target::Level(d) if !same_level(d, level) => {
                    level = d;
                    continue;
                }
                Target::Level(_) => return None,
            };
            let mut found = false;
            loop {
                found |= node.key == *key;
                // SAFETY: as above.
                match unsafe { Tagged::<K, V>::from_raw(node.next.load(Acquire)).target() } {
                    Target::Node(n) => node = n,
                    Target::Level(_) => break,
                }
            }
            return found.then_some((level, idx, node));
        }
    }

    /// Appends a node for `key` to the end of its bucket chain without the
    /// threshold check. Returns false if the key exists or its bucket is
    /// empty or expanded.
    pub fn fixture_append_unchecked(&self, key: K, value: V) -> bool {
        let hash = self.hash(&key).0;
        let mut level = self.root();
        loop {
            let idx = level.bucket_of(hash, self.config.w);
            let slot = &level.buckets[idx];
            // SAFETY: read from a slot of this map.
            let mut node = match unsafe { Tagged::<K, V>::from_raw(slot.load(Acquire)).target() } {
                Target::Node(n) => n,
                Target::Level(d) if !same_level(d, level) => {
                    level = d;
                    continue;
                }
                Target::Level(_) => return false,
            };
            loop {
                if node.key == key {
                    return false;
                }
                // SAFETY: as above.
                match unsafe { Tagged::<K, V>::from_raw(node.next.load(Acquire)).target() } {
                    Target::Node(n) => node = n,
                    Target::Level(_) => break,
                }
            }
            let fresh = Box::new(Node::new(hash, key, value));
            fresh.next.store(Tagged::level(level).0, Relaxed);
            let fresh = Box::into_raw(fresh);
            let close = Tagged::level(level).0;
            if node
                .next
                .compare_exchange(close, Tagged::node(fresh).0, Release, Relaxed)
                .is_err()
            {
                // SAFETY: not published.
                drop(unsafe { Box::from_raw(fresh) });
                return false;
            }
            self.count.incr();
            return true;
        }
    }

    /// Points the tail of `key`'s chain at the level that holds `other`'s chain.
    pub fn fixture_retarget_tail(&self, key: &K, other: &K) -> bool {
        let (Some((_, _, tail)), Some((target, _, _))) = (self.locate(key), self.locate(other))
        else {
            return false;
        };
        tail.next.store(Tagged::level(target).0, Release);
        true
    }
}
