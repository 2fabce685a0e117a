//! Levels, chain nodes and the tagged word stored in every slot.

use std::marker::PhantomData;
use std::ptr;
use std::sync::atomic::{AtomicU32, AtomicUsize, Ordering};

use crate::hash::{chunk_index, KeyHash};

const LEVEL_TAG: usize = 1;

/// A fixed array of `2^w` bucket slots plus the back reference to its parent.
pub(crate) struct Level<K, V> {
    pub(crate) depth: u32,
    pub(crate) prev: *const Level<K, V>,
    /// Bucket of `prev` this level was expanded from.
    pub(crate) parent_bucket: usize,
    pub(crate) buckets: Box<[AtomicUsize]>,
    pub(crate) writes: Option<Box<[AtomicU32]>>,
    _nodes: PhantomData<*const Node<K, V>>,
}

/// Immutable key/value leaf. Only `next` changes after publication.
pub(crate) struct Node<K, V> {
    pub(crate) hash: u64,
    pub(crate) key: K,
    pub(crate) value: V,
    pub(crate) next: AtomicUsize,
}

impl<K, V> Level<K, V> {
    /// Allocates a level whose buckets all reference the level itself.
    pub(crate) fn alloc(
        depth: u32,
        prev: *const Level<K, V>,
        parent_bucket: usize,
        width: usize,
        instrument: bool,
    ) -> *mut Level<K, V> {
        let level = Box::into_raw(Box::new(Level {
            depth,
            prev,
            parent_bucket,
            buckets: Box::default(),
            writes: instrument.then(|| (0..width).map(|_| AtomicU32::new(0)).collect()),
            _nodes: PhantomData,
        }));
        let empty = Tagged::level(level).0;
        // SAFETY: freshly allocated and not yet shared.
        unsafe {
            (*level).buckets = (0..width).map(|_| AtomicUsize::new(empty)).collect();
        }
        level
    }

    #[inline]
    pub(crate) fn bucket_of(&self, hash: u64, w: u32) -> usize {
        chunk_index(KeyHash(hash), self.depth, w)
    }

    #[inline]
    pub(crate) fn note_write(&self, index: usize) {
        if let Some(w) = &self.writes {
            w[index].fetch_add(1, Ordering::Relaxed);
        }
    }

    #[inline]
    pub(crate) fn as_ptr(&self) -> *const Level<K, V> {
        self
    }
}

impl<K, V> Node<K, V> {
    pub(crate) fn new(hash: u64, key: K, value: V) -> Self {
        Node {
            hash,
            key,
            value,
            next: AtomicUsize::new(0),
        }
    }
}

/// The word held by a slot: a level pointer (low bit set) or a node pointer.
pub(crate) struct Tagged<K, V>(pub(crate) usize, PhantomData<*const (K, V)>);

impl<K, V> Clone for Tagged<K, V> {
    fn clone(&self) -> Self {
        *self
    }
}

impl<K, V> Copy for Tagged<K, V> {}

pub(crate) enum Target<'a, K, V> {
    Level(&'a Level<K, V>),
    Node(&'a Node<K, V>),
}

impl<K, V> Tagged<K, V> {
    #[inline]
    pub(crate) fn from_raw(word: usize) -> Self {
        Tagged(word, PhantomData)
    }

    #[inline]
    pub(crate) fn level(level: *const Level<K, V>) -> Self {
        Tagged(level as usize | LEVEL_TAG, PhantomData)
    }

    #[inline]
    pub(crate) fn node(node: *const Node<K, V>) -> Self {
        debug_assert_eq!(node as usize & LEVEL_TAG, 0);
        Tagged(node as usize, PhantomData)
    }

    /// # Safety
    /// The word must have been read from a slot of a live map.
    #[inline]
    pub(crate) unsafe fn target<'a>(self) -> Target<'a, K, V> {
        if self.0 & LEVEL_TAG != 0 {
            Target::Level(&*((self.0 & !LEVEL_TAG) as *const Level<K, V>))
        } else {
            Target::Node(&*(self.0 as *const Node<K, V>))
        }
    }
}

#[inline]
pub(crate) fn same_level<K, V>(a: &Level<K, V>, b: &Level<K, V>) -> bool {
    ptr::eq(a, b)
}
