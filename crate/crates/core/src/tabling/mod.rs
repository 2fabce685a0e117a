//! Two-level table space: a subgoal map whose values are per-subgoal answer
//! maps, plus a reachability (path) evaluation driven by a pool of queries.

mod graph;
mod path;

pub use graph::{Graph, GraphError};
pub use path::tabled_path;

use std::hash::Hash;
use std::sync::atomic::{AtomicBool, Ordering};

use crate::config::{Config, ConfigError};
use crate::hash::MixHash;
use crate::map::TrieMap;

/// Answers of one subgoal.
pub struct AnswerTable<A> {
    answers: TrieMap<A, ()>,
    complete: AtomicBool,
}

impl<A: Eq + Hash> AnswerTable<A> {
    fn new(config: Config) -> Self {
        AnswerTable {
            answers: TrieMap::with_hasher(config, MixHash).expect("config checked by TableSpace"),
            complete: AtomicBool::new(false),
        }
    }

    /// Check/insert of an answer; false means it was already known.
    pub fn add_answer(&self, answer: A) -> bool {
        self.answers.insert_or_get(answer, ()).inserted
    }

    pub fn contains(&self, answer: &A) -> bool {
        self.answers.contains_key(answer)
    }

    pub fn answers(&self) -> impl Iterator<Item = &A> {
        self.answers.snapshot_keys().map(|(a, _)| a)
    }

    pub fn len(&self) -> usize {
        self.answers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_complete(&self) -> bool {
        self.complete.load(Ordering::Acquire)
    }

    /// Marks evaluation of the subgoal finished. Returns false if it already was.
    pub fn mark_complete(&self) -> bool {
        !self.complete.swap(true, Ordering::AcqRel)
    }

    pub fn map(&self) -> &TrieMap<A, ()> {
        &self.answers
    }
}

pub struct TableSpace<S, A> {
    subgoals: TrieMap<S, AnswerTable<A>>,
    config: Config,
}

impl<S: Eq + Hash, A: Eq + Hash> TableSpace<S, A> {
    /// `config` shapes both the subgoal map and every answer map.
    pub fn new(config: Config) -> Result<Self, ConfigError> {
        Ok(TableSpace {
            subgoals: TrieMap::with_hasher(config, MixHash)?,
            config,
        })
    }

    /// Check/insert of a subgoal. Every caller gets the same table for a
    /// given key; `created` is true for exactly one of them.
    pub fn get_or_create_subgoal(&self, subgoal: S) -> (&AnswerTable<A>, bool) {
        if let Some(t) = self.subgoals.lookup(&subgoal) {
            return (t, false);
        }
        let out = self
            .subgoals
            .insert_or_get(subgoal, AnswerTable::new(self.config));
        (out.leaf.value(), out.inserted)
    }

    pub fn subgoal(&self, subgoal: &S) -> Option<&AnswerTable<A>> {
        self.subgoals.lookup(subgoal)
    }

    pub fn subgoals(&self) -> impl Iterator<Item = (&S, &AnswerTable<A>)> {
        self.subgoals.snapshot_keys()
    }

    pub fn subgoal_count(&self) -> usize {
        self.subgoals.len()
    }

    pub fn config(&self) -> &Config {
        &self.config
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::atomic::AtomicUsize;

    #[test]
    fn subgoal_check_insert() {
        let ts: TableSpace<u32, u32> = TableSpace::new(Config::default()).unwrap();
        let (a, created) = ts.get_or_create_subgoal(7);
        assert!(created);
        let (b, again) = ts.get_or_create_subgoal(7);
        assert!(!again);
        assert!(std::ptr::eq(a, b));
        assert_eq!(ts.subgoal_count(), 1);
    }

    #[test]
    fn answers_deduplicate() {
        let ts: TableSpace<u32, u32> = TableSpace::new(Config::default()).unwrap();
        let (t, _) = ts.get_or_create_subgoal(0);
        assert!(t.add_answer(3));
        assert!(!t.add_answer(3));
        assert!(t.add_answer(4));
        assert_eq!(t.len(), 2);
        assert!(!t.is_complete());
        assert!(t.mark_complete());
        assert!(!t.mark_complete());
        assert!(t.is_complete());
    }

    #[test]
    fn one_creator_among_many_threads() {
        let ts: TableSpace<u64, u64> = TableSpace::new(Config::default()).unwrap();
        let created = AtomicUsize::new(0);
        let ids: Vec<usize> = std::thread::scope(|s| {
            let hs: Vec<_> = (0..32)
                .map(|_| {
                    s.spawn(|| {
                        let (t, c) = ts.get_or_create_subgoal(42);
                        if c {
                            created.fetch_add(1, Ordering::Relaxed);
                        }
                        t as *const AnswerTable<u64> as usize
                    })
                })
                .collect();
            hs.into_iter().map(|h| h.join().unwrap()).collect()
        });
        assert_eq!(created.load(Ordering::Relaxed), 1);
        assert!(ids.iter().all(|&i| i == ids[0]));
    }

    #[test]
    fn concurrent_answers_exact_count() {
        let ts: TableSpace<u64, u64> = TableSpace::new(Config::default()).unwrap();
        let (t, _) = ts.get_or_create_subgoal(1);
        let fresh = AtomicUsize::new(0);
        std::thread::scope(|s| {
            for th in 0..4u64 {
                let (t, fresh) = (t, &fresh);
                s.spawn(move || {
                    // overlapping ranges: 0..5000 shifted by 1000 per thread
                    for a in th * 1000..th * 1000 + 5000 {
                        if t.add_answer(a) {
                            fresh.fetch_add(1, Ordering::Relaxed);
                        }
                    }
                });
            }
        });
        assert_eq!(t.len(), 8000);
        assert_eq!(fresh.load(Ordering::Relaxed), 8000);
        assert_eq!(t.answers().count(), 8000);
    }
}
