//! Named protocol points where an interleaving test can suspend the thread
//! running an insert. Calls to the hook only exist with the `test-hooks`
//! feature; without it the protocol code is unchanged.

use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PausePoint {
    /// New level allocated, about to CAS it into the chain tail.
    PreExpansionCas,
    /// Expansion CAS succeeded; this thread is now the remapper.
    PostExpansionCas,
    /// A chain node was linked into its bucket in the deeper level.
    PostNodeRemap,
    /// The predecessor of the node just remapped now references the new level.
    PostChainBreak,
    /// All nodes remapped; the old bucket is about to reference the new level.
    PreBucketGray,
    /// The old bucket now references the new level.
    PostBucketGray,
}

impl PausePoint {
    pub const ALL: [PausePoint; 6] = [
        PausePoint::PreExpansionCas,
        PausePoint::PostExpansionCas,
        PausePoint::PostNodeRemap,
        PausePoint::PostChainBreak,
        PausePoint::PreBucketGray,
        PausePoint::PostBucketGray,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PausePoint::PreExpansionCas => "pre-expansion-cas",
            PausePoint::PostExpansionCas => "post-expansion-cas",
            PausePoint::PostNodeRemap => "post-node-remap",
            PausePoint::PostChainBreak => "post-chain-break",
            PausePoint::PreBucketGray => "pre-bucket-gray",
            PausePoint::PostBucketGray => "post-bucket-gray",
        }
    }
}

impl fmt::Display for PausePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown pause point `{0}`")]
pub struct UnknownPausePoint(pub String);

impl FromStr for PausePoint {
    type Err = UnknownPausePoint;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        PausePoint::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| UnknownPausePoint(s.to_string()))
    }
}

/// Called by whichever thread reaches a pause point.
pub trait ProtocolHook: Send + Sync {
    fn reached(&self, point: PausePoint);
}
