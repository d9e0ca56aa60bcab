//! Policies, trust entries and their fixed-size wire encodings.
//!
//! Entry layout (128 bytes, integers big-endian):
//!
//! | offset    | field     |
//! |-----------|-----------|
//! | 0..8      | subject   |
//! | 8..48     | policy    |
//! | 48..112   | signature |
//! | 112..128  | reserved  |
//!
//! Policy layout (40 bytes): criteria `0..2`, attested_at `2..10`,
//! expires_at `10..18`, protocol_id `18..20`, flags `20..22`, zero padding
//! `22..40`.

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::ids::{NodeId, NODE_ID_LEN};

pub const POLICY_LEN: usize = 40;
pub const SIGNATURE_LEN: usize = 64;
pub const RESERVED_LEN: usize = 16;
pub const ENTRY_LEN: usize = NODE_ID_LEN + POLICY_LEN + SIGNATURE_LEN + RESERVED_LEN;
pub const DIGEST_LEN: usize = 8;

/// Seconds. The simulator maps one round to one second.
pub type Timestamp = u64;

pub type ProtocolId = u16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Policy {
    pub criteria_code: u16,
    pub attested_at: Timestamp,
    /// `0` means the attestation never expires.
    pub expires_at: Timestamp,
    pub protocol_id: ProtocolId,
    pub flags: u16,
}

impl Policy {
    pub fn new(
        criteria_code: u16,
        attested_at: Timestamp,
        expires_at: Timestamp,
        protocol_id: ProtocolId,
    ) -> Result<Self> {
        let policy = Policy {
            criteria_code,
            attested_at,
            expires_at,
            protocol_id,
            flags: 0,
        };
        policy.validate()?;
        Ok(policy)
    }

    fn validate(&self) -> Result<()> {
        if self.expires_at != 0 && self.expires_at <= self.attested_at {
            return Err(Error::InvalidInput(format!(
                "policy expires at {} but was attested at {}",
                self.expires_at, self.attested_at
            )));
        }
        Ok(())
    }

    /// Valid at `now` when it never expires or `expires_at >= now`.
    pub fn is_valid_at(&self, now: Timestamp) -> bool {
        self.expires_at == 0 || self.expires_at >= now
    }

    pub fn encode(&self) -> [u8; POLICY_LEN] {
        let mut out = [0u8; POLICY_LEN];
        out[0..2].copy_from_slice(&self.criteria_code.to_be_bytes());
        out[2..10].copy_from_slice(&self.attested_at.to_be_bytes());
        out[10..18].copy_from_slice(&self.expires_at.to_be_bytes());
        out[18..20].copy_from_slice(&self.protocol_id.to_be_bytes());
        out[20..22].copy_from_slice(&self.flags.to_be_bytes());
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        if bytes.len() != POLICY_LEN {
            return Err(Error::Decode(format!(
                "policy must be {POLICY_LEN} bytes, got {}",
                bytes.len()
            )));
        }
        if bytes[22..].iter().any(|&b| b != 0) {
            return Err(Error::Decode("non-zero policy padding".into()));
        }
        let policy = Policy {
            criteria_code: u16::from_be_bytes([bytes[0], bytes[1]]),
            attested_at: u64::from_be_bytes(bytes[2..10].try_into().unwrap()),
            expires_at: u64::from_be_bytes(bytes[10..18].try_into().unwrap()),
            protocol_id: u16::from_be_bytes([bytes[18], bytes[19]]),
            flags: u16::from_be_bytes([bytes[20], bytes[21]]),
        };
        policy
            .validate()
            .map_err(|e| Error::Decode(e.to_string()))?;
        Ok(policy)
    }
}

/// 64-byte signature slot. All zero when the signing extension is off.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct SignatureBytes(pub [u8; SIGNATURE_LEN]);

impl SignatureBytes {
    pub const ZERO: SignatureBytes = SignatureBytes([0u8; SIGNATURE_LEN]);

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&b| b == 0)
    }
}

impl Default for SignatureBytes {
    fn default() -> Self {
        Self::ZERO
    }
}

impl std::fmt::Debug for SignatureBytes {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.is_zero() {
            return f.write_str("SignatureBytes(0)");
        }
        write!(f, "SignatureBytes(")?;
        for b in &self.0[..8] {
            write!(f, "{b:02x}")?;
        }
        write!(f, "..)")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TrustEntry {
    pub subject: NodeId,
    pub policy: Policy,
    pub signature: SignatureBytes,
    pub reserved: [u8; RESERVED_LEN],
}

impl TrustEntry {
    pub fn new(subject: NodeId, policy: Policy) -> Self {
        TrustEntry {
            subject,
            policy,
            signature: SignatureBytes::ZERO,
            reserved: [0u8; RESERVED_LEN],
        }
    }

    pub fn with_signature(mut self, signature: SignatureBytes) -> Self {
        self.signature = signature;
        self
    }

    pub fn digest(&self) -> EntryDigest {
        entry_digest(self.subject, &self.policy)
    }

    pub fn encode(&self) -> [u8; ENTRY_LEN] {
        let mut out = [0u8; ENTRY_LEN];
        out[0..8].copy_from_slice(self.subject.as_bytes());
        out[8..48].copy_from_slice(&self.policy.encode());
        out[48..112].copy_from_slice(&self.signature.0);
        out[112..128].copy_from_slice(&self.reserved);
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        if bytes.len() != ENTRY_LEN {
            return Err(Error::Decode(format!(
                "trust entry must be {ENTRY_LEN} bytes, got {}",
                bytes.len()
            )));
        }
        Ok(TrustEntry {
            subject: NodeId(bytes[0..8].try_into().unwrap()),
            policy: Policy::decode(&bytes[8..48])?,
            signature: SignatureBytes(bytes[48..112].try_into().unwrap()),
            reserved: bytes[112..128].try_into().unwrap(),
        })
    }
}

/// Concatenated encoding of a batch of entries, `ENTRY_LEN` bytes each.
pub fn encode_entries(entries: &[TrustEntry]) -> Vec<u8> {
    let mut out = Vec::with_capacity(entries.len() * ENTRY_LEN);
    for e in entries {
        out.extend_from_slice(&e.encode());
    }
    out
}

pub fn decode_entries(bytes: &[u8]) -> Result<Vec<TrustEntry>> {
    if !bytes.len().is_multiple_of(ENTRY_LEN) {
        return Err(Error::Decode(format!(
            "entry batch length {} is not a multiple of {ENTRY_LEN}",
            bytes.len()
        )));
    }
    bytes
        .chunks_exact(ENTRY_LEN)
        .map(TrustEntry::decode)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EntryDigest(pub [u8; DIGEST_LEN]);

/// SHA-256 over `subject || policy` (48 bytes), truncated to 8 bytes.
///
/// The signature slot is not covered, so both ends of a sync agree on the
/// digest whether or not the signing extension is active.
pub fn entry_digest(subject: NodeId, policy: &Policy) -> EntryDigest {
    let mut hasher = Sha256::new();
    hasher.update(subject.as_bytes());
    hasher.update(policy.encode());
    let out = hasher.finalize();
    EntryDigest(out[..DIGEST_LEN].try_into().unwrap())
}
