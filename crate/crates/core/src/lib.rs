//! An insert-only, lock-free hash trie map.
//!
//! Keys are spread over a hierarchy of small fixed-size hash levels. Each
//! bucket holds a short separate chain whose last node refers back to the
//! level that owns it; a chain that reaches the configured threshold is
//! expanded into a deeper level and its nodes are moved there one at a time,
//! starting from the tail. Readers never wait and never miss a node that was
//! already inserted.
//!
//! The crate also carries a lock-based baseline with the same check/insert
//! contract ([`lockbased`]), a two-level table space for tabled evaluation
//! ([`tabling`]), and validators and stress drivers ([`verify`]).
//!
//! ```
//! use lfht::{Config, TrieMap};
//!
//! let map: TrieMap<u64, String> = TrieMap::new(Config::default()).unwrap();
//! let first = map.insert_or_get(7, "seven".into());
//! assert!(first.inserted);
//! let again = map.insert_or_get(7, "other".into());
//! assert!(!again.inserted);
//! assert_eq!(again.leaf, first.leaf);
//! assert_eq!(map.lookup(&7).map(String::as_str), Some("seven"));
//! ```

pub mod config;
pub mod hash;
pub mod lockbased;
pub mod map;
pub mod tabling;
pub mod verify;

mod table;

pub use config::{Config, ConfigError};
pub use hash::{chunk_index, mix64, IdentityHash, KeyHash, KeyHasher, MixHash};
pub use lockbased::LockedMap;
pub use map::{InsertOutcome, Instrumentation, Leaf, LevelId, TrieMap};
pub use table::CheckInsert;
