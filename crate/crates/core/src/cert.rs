//! Membership certificates for permissioned networks.
//!
//! An issuer (owner or manufacturer) signs a node ID; peers and the key
//! generator accept a certificate only if its issuer is in their allowed set.

use std::collections::BTreeSet;

use ed25519_dalek::{Signature, Signer, SigningKey, Verifier, VerifyingKey};

use crate::error::{Error, Result};
use crate::ids::{NodeId, NODE_ID_LEN};

const CERT_DOMAIN: &[u8] = b"trust-gossip/membership-cert/v1";

pub const CERTIFICATE_LEN: usize = NODE_ID_LEN + 32 + 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct IssuerKey(pub [u8; 32]);

#[derive(Clone, PartialEq, Eq)]
pub struct Certificate {
    pub subject: NodeId,
    pub issuer: IssuerKey,
    pub signature: [u8; 64],
}

impl std::fmt::Debug for Certificate {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Certificate")
            .field("subject", &self.subject)
            .field(
                "issuer",
                &format_args!("{:02x}{:02x}..", self.issuer.0[0], self.issuer.0[1]),
            )
            .finish()
    }
}

fn cert_message(subject: NodeId) -> Vec<u8> {
    let mut msg = Vec::with_capacity(CERT_DOMAIN.len() + NODE_ID_LEN);
    msg.extend_from_slice(CERT_DOMAIN);
    msg.extend_from_slice(subject.as_bytes());
    msg
}

impl Certificate {
    /// `subject || issuer key || signature`, 104 bytes.
    pub fn encode(&self) -> [u8; CERTIFICATE_LEN] {
        let mut out = [0u8; CERTIFICATE_LEN];
        out[..8].copy_from_slice(self.subject.as_bytes());
        out[8..40].copy_from_slice(&self.issuer.0);
        out[40..].copy_from_slice(&self.signature);
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        if bytes.len() != CERTIFICATE_LEN {
            return Err(Error::Decode(format!(
                "certificate must be {CERTIFICATE_LEN} bytes, got {}",
                bytes.len()
            )));
        }
        Ok(Certificate {
            subject: NodeId(bytes[..8].try_into().unwrap()),
            issuer: IssuerKey(bytes[8..40].try_into().unwrap()),
            signature: bytes[40..].try_into().unwrap(),
        })
    }

    /// Checks the issuer signature only; whether the issuer is allowed is
    /// the caller's policy, see [`IssuerSet::admits`].
    pub fn signature_valid(&self) -> bool {
        let Ok(key) = VerifyingKey::from_bytes(&self.issuer.0) else {
            return false;
        };
        key.verify(
            &cert_message(self.subject),
            &Signature::from_bytes(&self.signature),
        )
        .is_ok()
    }
}

pub struct Issuer {
    key: SigningKey,
}

impl Issuer {
    pub fn from_seed(seed: [u8; 32]) -> Self {
        Issuer {
            key: SigningKey::from_bytes(&seed),
        }
    }

    pub fn public(&self) -> IssuerKey {
        IssuerKey(self.key.verifying_key().to_bytes())
    }

    pub fn issue(&self, subject: NodeId) -> Certificate {
        Certificate {
            subject,
            issuer: self.public(),
            signature: self.key.sign(&cert_message(subject)).to_bytes(),
        }
    }
}

/// Issuers whose certificates admit a node to a permissioned network.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct IssuerSet(BTreeSet<IssuerKey>);

impl IssuerSet {
    pub fn new(keys: impl IntoIterator<Item = IssuerKey>) -> Self {
        IssuerSet(keys.into_iter().collect())
    }

    pub fn allow(&mut self, key: IssuerKey) {
        self.0.insert(key);
    }

    pub fn contains(&self, key: &IssuerKey) -> bool {
        self.0.contains(key)
    }

    /// True iff `cert` names `claimed`, comes from an allowed issuer, and its
    /// signature verifies.
    pub fn admits(&self, cert: &Certificate, claimed: NodeId) -> bool {
        cert.subject == claimed && self.contains(&cert.issuer) && cert.signature_valid()
    }
}
