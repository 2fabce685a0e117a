//! Key hashing and hash-chunk indexing.

use std::hash::{Hash, Hasher};

/// Full-width hash of a key as seen by one map instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct KeyHash(pub u64);

impl KeyHash {
    /// Bucket index at `depth` for levels of `2^w` buckets.
    #[inline]
    pub fn chunk(self, depth: u32, w: u32) -> usize {
        chunk_index(self, depth, w)
    }
}

/// Bits `[w*depth, w*(depth+1))` of `h`. Bits beyond the 64-bit word read as zero.
#[inline]
pub fn chunk_index(h: KeyHash, depth: u32, w: u32) -> usize {
    let shifted = (w as u64)
        .checked_mul(depth as u64)
        .and_then(|s| u32::try_from(s).ok())
        .and_then(|s| h.0.checked_shr(s))
        .unwrap_or(0);
    (shifted & ((1u64 << w) - 1)) as usize
}

/// Hash function plugged into a map. Must be deterministic for the lifetime of
/// the map and consistent with the key's `Eq`.
pub trait KeyHasher<K: ?Sized> {
    fn hash_key(&self, key: &K) -> u64;
}

impl<K: ?Sized, F> KeyHasher<K> for F
where
    F: Fn(&K) -> u64,
{
    #[inline]
    fn hash_key(&self, key: &K) -> u64 {
        self(key)
    }
}

/// 64-bit finalizer (the MurmurHash3 `fmix64` constants).
#[inline]
pub fn mix64(mut x: u64) -> u64 {
    x ^= x >> 33;
    x = x.wrapping_mul(0xff51_afd7_ed55_8ccd);
    x ^= x >> 33;
    x = x.wrapping_mul(0xc4ce_b9fe_1a85_ec53);
    x ^= x >> 33;
    x
}

const FOLD_SEED: u64 = 0x243f_6a88_85a3_08d3;
const FOLD_MUL: u64 = 0x9e37_79b9_7f4a_7c15;

/// Default hasher: folds the key's `Hash` words and finishes with [`mix64`].
#[derive(Debug, Default, Clone, Copy)]
pub struct MixHash;

impl<K: Hash + ?Sized> KeyHasher<K> for MixHash {
    #[inline]
    fn hash_key(&self, key: &K) -> u64 {
        let mut st = MixState(FOLD_SEED);
        key.hash(&mut st);
        st.finish()
    }
}

struct MixState(u64);

impl MixState {
    #[inline]
    fn fold(&mut self, word: u64) {
        self.0 = (self.0.rotate_left(23) ^ word).wrapping_mul(FOLD_MUL);
    }
}

impl Hasher for MixState {
    #[inline]
    fn finish(&self) -> u64 {
        mix64(self.0)
    }

    fn write(&mut self, bytes: &[u8]) {
        let mut chunks = bytes.chunks_exact(8);
        for c in &mut chunks {
            self.fold(u64::from_le_bytes(c.try_into().unwrap()));
        }
        let rest = chunks.remainder();
        if !rest.is_empty() {
            let mut buf = [0u8; 8];
            buf[..rest.len()].copy_from_slice(rest);
            self.fold(u64::from_le_bytes(buf) ^ ((rest.len() as u64) << 56));
        }
    }

    #[inline]
    fn write_u64(&mut self, i: u64) {
        self.fold(i);
    }

    #[inline]
    fn write_u32(&mut self, i: u32) {
        self.fold(i as u64);
    }

    #[inline]
    fn write_usize(&mut self, i: usize) {
        self.fold(i as u64);
    }
}

/// Uses the integer key itself as its hash. Meant for tests that need to
/// place keys in chosen buckets.
#[derive(Debug, Default, Clone, Copy)]
pub struct IdentityHash;

macro_rules! identity_for {
    ($($t:ty),*) => {$(
        impl KeyHasher<$t> for IdentityHash {
            #[inline]
            fn hash_key(&self, key: &$t) -> u64 {
                *key as u64
            }
        }
    )*};
}

identity_for!(u8, u16, u32, u64, usize);
