use std::collections::BTreeSet;

use crate::bloom::BloomFilter;
use crate::cert::{Certificate, CERTIFICATE_LEN};
use crate::entry::{
    Policy, ProtocolId, SignatureBytes, TrustEntry, ENTRY_LEN, POLICY_LEN, SIGNATURE_LEN,
};
use crate::error::{Error, Result};
use crate::ids::{NodeId, NODE_ID_LEN};

/// Attestation protocols a node supports. Never empty.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AttestationProtocolSet(BTreeSet<ProtocolId>);

impl AttestationProtocolSet {
    pub fn new(ids: impl IntoIterator<Item = ProtocolId>) -> Result<Self> {
        let set: BTreeSet<_> = ids.into_iter().collect();
        if set.is_empty() {
            return Err(Error::InvalidInput(
                "attestation protocol set is empty".into(),
            ));
        }
        Ok(AttestationProtocolSet(set))
    }

    pub fn single(id: ProtocolId) -> Self {
        AttestationProtocolSet(BTreeSet::from([id]))
    }

    pub fn contains(&self, id: ProtocolId) -> bool {
        self.0.contains(&id)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = ProtocolId> + '_ {
        self.0.iter().copied()
    }
}

/// Smallest protocol both sides support, if any.
pub fn choose_protocol(
    a: &AttestationProtocolSet,
    b: &AttestationProtocolSet,
) -> Option<ProtocolId> {
    a.0.intersection(&b.0).next().copied()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MessageKind {
    Hello,
    SyncSignal,
    MissingEntries,
    AttestChallenge,
    AttestEvidence,
    PolicyOffer,
    PolicySignature,
    Terminate,
}

impl MessageKind {
    pub fn as_str(self) -> &'static str {
        match self {
            MessageKind::Hello => "hello",
            MessageKind::SyncSignal => "sync_signal",
            MessageKind::MissingEntries => "missing_entries",
            MessageKind::AttestChallenge => "attest_challenge",
            MessageKind::AttestEvidence => "attest_evidence",
            MessageKind::PolicyOffer => "policy_offer",
            MessageKind::PolicySignature => "policy_signature",
            MessageKind::Terminate => "terminate",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TerminateReason {
    IncompatibleProtocols,
    AttestationFailed,
    SignatureInvalid,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Message {
    Hello {
        sender: NodeId,
        filter: BloomFilter,
        protocols: AttestationProtocolSet,
        certificate: Option<Certificate>,
    },
    SyncSignal,
    MissingEntries {
        entries: Vec<TrustEntry>,
    },
    AttestChallenge {
        protocol_id: ProtocolId,
        nonce: [u8; 8],
    },
    AttestEvidence {
        protocol_id: ProtocolId,
        evidence: Vec<u8>,
    },
    PolicyOffer {
        policy: Policy,
    },
    PolicySignature {
        signature: SignatureBytes,
    },
    Terminate {
        reason: TerminateReason,
    },
}

/// Per-message byte costs that are not implied by message contents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct WireCosts {
    /// Charged for each attestation challenge and evidence message.
    pub attest_message_bytes: usize,
}

impl Message {
    pub fn kind(&self) -> MessageKind {
        match self {
            Message::Hello { .. } => MessageKind::Hello,
            Message::SyncSignal => MessageKind::SyncSignal,
            Message::MissingEntries { .. } => MessageKind::MissingEntries,
            Message::AttestChallenge { .. } => MessageKind::AttestChallenge,
            Message::AttestEvidence { .. } => MessageKind::AttestEvidence,
            Message::PolicyOffer { .. } => MessageKind::PolicyOffer,
            Message::PolicySignature { .. } => MessageKind::PolicySignature,
            Message::Terminate { .. } => MessageKind::Terminate,
        }
    }

    /// Bytes charged to this message in traffic accounting.
    ///
    /// Hello is `id + filter + 2 per protocol + certificate`; MissingEntries is
    /// 128 per entry; signalling messages carry no payload.
    pub fn wire_len(&self, costs: &WireCosts) -> usize {
        match self {
            Message::Hello {
                filter,
                protocols,
                certificate,
                ..
            } => {
                NODE_ID_LEN
                    + filter.byte_len()
                    + 2 * protocols.len()
                    + certificate.as_ref().map_or(0, |_| CERTIFICATE_LEN)
            }
            Message::SyncSignal | Message::Terminate { .. } => 0,
            Message::MissingEntries { entries } => ENTRY_LEN * entries.len(),
            Message::AttestChallenge { .. } | Message::AttestEvidence { .. } => {
                costs.attest_message_bytes
            }
            Message::PolicyOffer { .. } => POLICY_LEN,
            Message::PolicySignature { .. } => SIGNATURE_LEN,
        }
    }
}
