//! Gossip-based transitive attestation.
//!
//! Nodes running inside TEEs attest each other pairwise and then share the
//! entries of their trusted-node lists, filtered through a Bloom filter of the
//! peer's list, so trust established by one attestation spreads through the
//! network without every pair attesting directly.

pub mod bloom;
pub mod cert;
pub mod entry;
pub mod error;
pub mod extension;
pub mod ids;
pub mod murmur3;
pub mod protocol;
pub mod store;
pub mod topology;

pub use bloom::BloomFilter;
pub use entry::{
    entry_digest, EntryDigest, Policy, ProtocolId, SignatureBytes, Timestamp, TrustEntry,
};
pub use error::{Error, Result};
pub use ids::{derive_node_id, NodeId};
pub use protocol::{run_pairwise, NodeState, Variant};
pub use store::{InsertOutcome, MergeRule, TrustStore};
