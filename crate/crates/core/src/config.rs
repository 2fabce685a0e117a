use thiserror::Error;

/// Invalid map configuration.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("bits per level must be at least 1")]
    ZeroWidth,
    #[error("chain threshold must be at least 1")]
    ZeroThreshold,
    #[error("hash width must be between 1 and 64 bits, got {0}")]
    HashBits(u32),
    #[error("bits per level ({w}) exceed the hash width ({hash_bits})")]
    WidthExceedsHash { w: u32, hash_bits: u32 },
    #[error("bits per level ({0}) too large for an in-memory bucket array")]
    WidthTooLarge(u32),
    #[error("initial bucket count must be a power of two, got {0}")]
    NotPowerOfTwo(usize),
}

/// Shape parameters of a [`TrieMap`](crate::TrieMap).
///
/// Every hash level holds `2^w` buckets. A bucket chain that already holds
/// `threshold` nodes is expanded into a deeper level instead of growing, except
/// at `max_depth()`, where no hash bits remain and chains grow without bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Config {
    pub w: u32,
    pub threshold: usize,
    pub hash_bits: u32,
    /// Record per-bucket write counts and protocol counters.
    pub instrument: bool,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            w: 3,
            threshold: 3,
            hash_bits: 64,
            instrument: false,
        }
    }
}

impl Config {
    pub fn new(w: u32, threshold: usize) -> Self {
        Config {
            w,
            threshold,
            ..Config::default()
        }
    }

    pub fn with_hash_bits(mut self, hash_bits: u32) -> Self {
        self.hash_bits = hash_bits;
        self
    }

    pub fn instrumented(mut self) -> Self {
        self.instrument = true;
        self
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.w == 0 {
            return Err(ConfigError::ZeroWidth);
        }
        if self.threshold == 0 {
            return Err(ConfigError::ZeroThreshold);
        }
        if self.hash_bits == 0 || self.hash_bits > 64 {
            return Err(ConfigError::HashBits(self.hash_bits));
        }
        if self.w > self.hash_bits {
            return Err(ConfigError::WidthExceedsHash {
                w: self.w,
                hash_bits: self.hash_bits,
            });
        }
        if self.w > 24 {
            return Err(ConfigError::WidthTooLarge(self.w));
        }
        Ok(())
    }

    pub fn buckets_per_level(&self) -> usize {
        1usize << self.w
    }

    /// Deepest level that may exist; the root is depth 0.
    pub fn max_depth(&self) -> u32 {
        self.hash_bits / self.w
    }

    pub(crate) fn hash_mask(&self) -> u64 {
        if self.hash_bits >= 64 {
            u64::MAX
        } else {
            (1u64 << self.hash_bits) - 1
        }
    }
}
