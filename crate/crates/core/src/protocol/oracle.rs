use crate::entry::ProtocolId;
use crate::ids::NodeId;

/// Decides whether one remote attestation succeeds.
///
/// The engine only calls it with a protocol both sides support.
pub trait AttestationOracle {
    fn attest(
        &mut self,
        prover: NodeId,
        verifier: NodeId,
        protocol_id: ProtocolId,
        nonce: [u8; 8],
    ) -> bool;
}

impl<F> AttestationOracle for F
where
    F: FnMut(NodeId, NodeId, ProtocolId, [u8; 8]) -> bool,
{
    fn attest(
        &mut self,
        prover: NodeId,
        verifier: NodeId,
        protocol_id: ProtocolId,
        nonce: [u8; 8],
    ) -> bool {
        self(prover, verifier, protocol_id, nonce)
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct AlwaysSucceed;

impl AttestationOracle for AlwaysSucceed {
    fn attest(&mut self, _: NodeId, _: NodeId, _: ProtocolId, _: [u8; 8]) -> bool {
        true
    }
}

/// Succeeds with probability `asr`, as a pure function of `(key, nonce)`.
///
/// Nonces are derived from the interaction's position in the schedule, so two
/// runs over the same schedule see the same coin for the same attempt even if
/// they make different numbers of attempts overall.
#[derive(Debug, Clone, Copy)]
pub struct RateOracle {
    pub key: u64,
    pub asr: f64,
}

impl AttestationOracle for RateOracle {
    fn attest(&mut self, _: NodeId, _: NodeId, _: ProtocolId, nonce: [u8; 8]) -> bool {
        if self.asr >= 1.0 {
            return true;
        }
        let x = splitmix64(self.key ^ u64::from_be_bytes(nonce));
        // top 53 bits -> uniform in [0, 1)
        let u = (x >> 11) as f64 / (1u64 << 53) as f64;
        u < self.asr
    }
}

pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
