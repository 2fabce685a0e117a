use std::cell::Cell;
use std::collections::BTreeMap;
use std::sync::atomic::{AtomicU64, AtomicUsize, Ordering};

use crossbeam_utils::CachePadded;
use thiserror::Error;

/// Identity of a hash level (its address). Stable for the life of the map.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LevelId(pub usize);

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("instrumentation is disabled for this map")]
pub struct StatsDisabled;

/// Snapshot of the protocol counters of an instrumented map.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Instrumentation {
    /// Successful writes per bucket slot; buckets never written are omitted.
    pub bucket_update_counts: BTreeMap<(LevelId, usize), u32>,
    pub expansions: u64,
    pub cas_failures: u64,
    /// Traversals that reached the end of a chain and found a reference to
    /// a level other than their own.
    pub restarts: u64,
    /// Expansions started by a remapper whose destination chain was full.
    pub cascades: u64,
}

impl Instrumentation {
    pub fn max_bucket_writes(&self) -> u32 {
        self.bucket_update_counts.values().copied().max().unwrap_or(0)
    }
}

#[derive(Default)]
pub(crate) struct Counters {
    pub(crate) expansions: CachePadded<AtomicU64>,
    pub(crate) cas_failures: CachePadded<AtomicU64>,
    pub(crate) restarts: CachePadded<AtomicU64>,
    pub(crate) cascades: CachePadded<AtomicU64>,
}

impl Counters {
    #[inline]
    pub(crate) fn bump(c: &AtomicU64) {
        c.fetch_add(1, Ordering::Relaxed);
    }
}

const STRIPES: usize = 16;

/// Approximate counter split over cache lines so that concurrent inserts do
/// not all hit one word.
pub(crate) struct StripedCounter {
    stripes: [CachePadded<AtomicUsize>; STRIPES],
}

impl Default for StripedCounter {
    fn default() -> Self {
        StripedCounter {
            stripes: std::array::from_fn(|_| CachePadded::new(AtomicUsize::new(0))),
        }
    }
}

static NEXT_STRIPE: AtomicUsize = AtomicUsize::new(0);

thread_local! {
    static STRIPE: Cell<usize> = Cell::new(NEXT_STRIPE.fetch_add(1, Ordering::Relaxed) % STRIPES);
}

impl StripedCounter {
    #[inline]
    pub(crate) fn incr(&self) {
        let i = STRIPE.with(|s| s.get());
        self.stripes[i].fetch_add(1, Ordering::Relaxed);
    }

    pub(crate) fn sum(&self) -> usize {
        self.stripes.iter().map(|s| s.load(Ordering::Relaxed)).sum()
    }
}
