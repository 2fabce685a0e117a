use crate::hash::KeyHasher;
use crate::lockbased::LockedMap;
use crate::map::TrieMap;

/// The check/insert contract shared by the lock-free map and the baseline,
/// so workloads can be written once.
pub trait CheckInsert<K, V>: Sync {
    /// Returns the identity of the leaf holding `key` and whether this call
    /// created it.
    fn check_insert(&self, key: K, value: V) -> (usize, bool);

    fn get(&self, key: &K) -> Option<&V>;

    fn key_count(&self) -> usize;
}

impl<K, V, H> CheckInsert<K, V> for TrieMap<K, V, H>
where
    K: Eq + Send + Sync,
    V: Send + Sync,
    H: KeyHasher<K> + Send + Sync,
{
    #[inline]
    fn check_insert(&self, key: K, value: V) -> (usize, bool) {
        let out = self.insert_or_get(key, value);
        (out.leaf.id(), out.inserted)
    }

    #[inline]
    fn get(&self, key: &K) -> Option<&V> {
        self.lookup(key)
    }

    fn key_count(&self) -> usize {
        self.len()
    }
}

impl<K, V, H> CheckInsert<K, V> for LockedMap<K, V, H>
where
    K: Eq + Send + Sync,
    V: Send + Sync,
    H: KeyHasher<K> + Send + Sync,
{
    #[inline]
    fn check_insert(&self, key: K, value: V) -> (usize, bool) {
        let out = self.insert_or_get(key, value);
        (out.id, out.inserted)
    }

    #[inline]
    fn get(&self, key: &K) -> Option<&V> {
        self.lookup(key)
    }

    fn key_count(&self) -> usize {
        self.len()
    }
}
