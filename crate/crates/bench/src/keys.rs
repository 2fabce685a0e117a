use std::fmt;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Distribution {
    /// Random 64-bit keys hashed with the default mixer.
    Uniform,
    /// Keys hashed by identity, grouped so that every `fan` consecutive
    /// keys of the unshuffled stream agree on their lowest `2w` bits and
    /// collide through the first two levels.
    Collider { fan: usize },
}

impl fmt::Display for Distribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Distribution::Uniform => f.write_str("uniform"),
            Distribution::Collider { fan } => write!(f, "collider(fan={fan})"),
        }
    }
}

/// `n` random keys from `seed`. Repeats are possible but rare.
pub fn uniform_keys(seed: u64, n: usize) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.gen()).collect()
}

/// `n` distinct keys in groups of `fan` sharing their lowest `2w` bits,
/// shuffled with `seed`.
pub fn collider_keys(seed: u64, n: usize, w: u32, fan: usize) -> Vec<u64> {
    let fan = fan.max(1) as u64;
    let low_bits = (2 * w).min(63);
    let prefixes = 1u64 << low_bits;
    let mut keys: Vec<u64> = (0..n as u64)
        .map(|i| {
            let (group, member) = (i / fan, i % fan);
            let low = group % prefixes;
            let high = (group / prefixes) * fan + member;
            (high << low_bits) | low
        })
        .collect();
    keys.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    keys
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::{HashMap, HashSet};

    #[test]
    fn uniform_is_reproducible() {
        assert_eq!(uniform_keys(4, 100), uniform_keys(4, 100));
        assert_ne!(uniform_keys(4, 100), uniform_keys(5, 100));
    }

    #[test]
    fn collider_groups_share_low_bits() {
        let keys = collider_keys(1, 10_000, 3, 32);
        assert_eq!(keys.iter().collect::<HashSet<_>>().len(), 10_000);
        let mut groups: HashMap<u64, usize> = HashMap::new();
        for k in &keys {
            *groups.entry(k & 0o77).or_default() += 1;
        }
        // 10_000 / 32 groups spread round robin over 64 prefixes
        assert_eq!(groups.len(), 64);
        assert!(groups.values().all(|&c| c >= 32 * 4));
        assert_eq!(collider_keys(1, 10_000, 3, 32), keys);
    }
}
