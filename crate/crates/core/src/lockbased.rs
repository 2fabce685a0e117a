//! Lock-based baseline: separate chaining with one lock per bucket and a
//! global resize lock, doubling the bucket array when the load factor
//! passes one.
//!
//! Every operation holds the resize lock shared and then one bucket lock;
//! a resize holds the resize lock exclusively and no bucket lock. Readers
//! lock too.

use std::fmt;
use std::marker::PhantomData;
use std::ptr::NonNull;
use std::sync::atomic::{AtomicUsize, Ordering};

use parking_lot::{Mutex, RwLock};

use crate::config::ConfigError;
use crate::hash::{KeyHasher, MixHash};

struct Entry<K, V> {
    hash: u64,
    key: K,
    value: V,
}

type Bucket<K, V> = Mutex<Vec<NonNull<Entry<K, V>>>>;

pub struct LockedMap<K, V, H = MixHash> {
    hasher: H,
    table: RwLock<Vec<Bucket<K, V>>>,
    count: AtomicUsize,
    _owns: PhantomData<Box<Entry<K, V>>>,
}

// SAFETY: entries are only reached through the locks; shared references to
// keys and values are handed out, never mutable ones.
unsafe impl<K: Send + Sync, V: Send + Sync, H: Send + Sync> Send for LockedMap<K, V, H> {}
unsafe impl<K: Send + Sync, V: Send + Sync, H: Send + Sync> Sync for LockedMap<K, V, H> {}

/// Result of [`LockedMap::insert_or_get`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Outcome<'a, K, V> {
    pub key: &'a K,
    pub value: &'a V,
    /// Address of the entry; equal for every call that resolved to it.
    pub id: usize,
    pub inserted: bool,
}

fn new_buckets<K, V>(n: usize) -> Vec<Bucket<K, V>> {
    (0..n).map(|_| Mutex::new(Vec::new())).collect()
}

impl<K, V, H: Default> LockedMap<K, V, H> {
    pub fn new(initial_buckets: usize) -> Result<Self, ConfigError> {
        Self::with_hasher(initial_buckets, H::default())
    }
}

impl<K, V, H> LockedMap<K, V, H> {
    pub fn with_hasher(initial_buckets: usize, hasher: H) -> Result<Self, ConfigError> {
        if !initial_buckets.is_power_of_two() {
            return Err(ConfigError::NotPowerOfTwo(initial_buckets));
        }
        Ok(LockedMap {
            hasher,
            table: RwLock::new(new_buckets(initial_buckets)),
            count: AtomicUsize::new(0),
            _owns: PhantomData,
        })
    }

    pub fn len(&self) -> usize {
        self.count.load(Ordering::Relaxed)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn bucket_count(&self) -> usize {
        self.table.read().len()
    }

    /// Longest chain; for tests of the load-factor bound.
    pub fn max_chain(&self) -> usize {
        self.table.read().iter().map(|b| b.lock().len()).max().unwrap_or(0)
    }

    /// All pairs, in bucket order.
    pub fn entries(&self) -> Vec<(&K, &V)> {
        let table = self.table.read();
        let mut out = Vec::with_capacity(self.len());
        for b in table.iter() {
            for e in b.lock().iter() {
                // SAFETY: entries live until the map is dropped.
                let e = unsafe { e.as_ref() };
                out.push((&e.key, &e.value));
            }
        }
        out
    }

    fn grow(&self, seen_len: usize) {
        let mut table = self.table.write();
        if table.len() != seen_len || self.count.load(Ordering::Relaxed) <= table.len() {
            return;
        }
        let n = table.len() * 2;
        let mask = (n - 1) as u64;
        let mut next: Vec<Vec<NonNull<Entry<K, V>>>> = (0..n).map(|_| Vec::new()).collect();
        for b in table.iter_mut() {
            for e in b.get_mut().drain(..) {
                // SAFETY: live entry.
                let h = unsafe { e.as_ref() }.hash;
                next[(h & mask) as usize].push(e);
            }
        }
        *table = next.into_iter().map(Mutex::new).collect();
    }
}

impl<K: Eq, V, H: KeyHasher<K>> LockedMap<K, V, H> {
    pub fn lookup(&self, key: &K) -> Option<&V> {
        let hash = self.hasher.hash_key(key);
        let table = self.table.read();
        let bucket = table[(hash & (table.len() as u64 - 1)) as usize].lock();
        bucket.iter().find_map(|e| {
            // SAFETY: entries live until the map is dropped.
            let e = unsafe { e.as_ref() };
            (e.hash == hash && e.key == *key).then_some(&e.value)
        })
    }

    pub fn insert_or_get(&self, key: K, value: V) -> Outcome<'_, K, V> {
        let hash = self.hasher.hash_key(&key);
        let (out, table_len) = {
            let table = self.table.read();
            let mut bucket = table[(hash & (table.len() as u64 - 1)) as usize].lock();
            let found = bucket.iter().find(|e| {
                // SAFETY: entries live until the map is dropped.
                let e = unsafe { e.as_ref() };
                e.hash == hash && e.key == key
            });
            if let Some(&e) = found {
                // SAFETY: as above.
                let r = unsafe { e.as_ref() };
                let out = Outcome {
                    key: &r.key,
                    value: &r.value,
                    id: e.as_ptr() as usize,
                    inserted: false,
                };
                return out;
            }
            let e = NonNull::from(Box::leak(Box::new(Entry { hash, key, value })));
            bucket.push(e);
            // SAFETY: just allocated; lives until the map is dropped.
            let r = unsafe { e.as_ref() };
            let out = Outcome {
                key: &r.key,
                value: &r.value,
                id: e.as_ptr() as usize,
                inserted: true,
            };
            (out, table.len())
        };
        if self.count.fetch_add(1, Ordering::Relaxed) + 1 > table_len {
            self.grow(table_len);
        }
        out
    }
}

impl<K, V, H> Drop for LockedMap<K, V, H> {
    fn drop(&mut self) {
        for b in self.table.get_mut().iter_mut() {
            for e in b.get_mut().drain(..) {
                // SAFETY: each entry is owned by exactly one bucket.
                drop(unsafe { Box::from_raw(e.as_ptr()) });
            }
        }
    }
}

impl<K, V, H> fmt::Debug for LockedMap<K, V, H> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LockedMap")
            .field("len", &self.len())
            .field("buckets", &self.bucket_count())
            .finish_non_exhaustive()
    }
}
