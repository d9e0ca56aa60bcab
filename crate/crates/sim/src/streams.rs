//! Named random sub-streams derived from a trial seed, so that e.g. switching
//! the variant never changes the topology or the interaction schedule.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Topology,
    Schedule,
    Attestation,
    NodeKeys,
    Authority,
}

impl Stream {
    fn label(self) -> &'static [u8] {
        match self {
            Stream::Topology => b"topology",
            Stream::Schedule => b"schedule",
            Stream::Attestation => b"attestation",
            Stream::NodeKeys => b"node-keys",
            Stream::Authority => b"authority",
        }
    }
}

pub fn seed_bytes(trial_seed: u64, stream: Stream) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(b"trust-gossip-sim/stream/");
    h.update(stream.label());
    h.update(trial_seed.to_be_bytes());
    h.finalize().into()
}

pub fn rng(trial_seed: u64, stream: Stream) -> ChaCha8Rng {
    ChaCha8Rng::from_seed(seed_bytes(trial_seed, stream))
}
