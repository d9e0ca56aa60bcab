//! Epoch-keyed policy signatures for networks where some nodes may be
//! physically compromised.
//!
//! A key generator (PKG) issues each admitted node a signing key for one
//! epoch, bound to `(node, epoch)` by a PKG signature. A prover signs the
//! policy its verifier created; anyone holding only the master public key can
//! later check that the policy was signed by a key the PKG issued to that node
//! for that epoch. Revocation is epoch-granular: denied nodes get no new keys.
//!
//! The signature carried in a trust entry's 64-byte slot is the SHA-512 digest
//! of a [`SignatureBundle`]; the bundle itself is published in a
//! content-addressed [`BundleTable`].

use std::cell::RefCell;
use std::collections::{BTreeSet, HashMap, HashSet};

use ed25519_dalek::{Signature, Signer, SigningKey, Verifier, VerifyingKey};
use sha2::{Digest, Sha512};

use crate::cert::{Certificate, IssuerSet};
use crate::entry::{Policy, SignatureBytes, Timestamp, TrustEntry};
use crate::error::{Error, Result};
use crate::ids::{NodeId, NODE_ID_LEN};

const BINDING_DOMAIN: &[u8] = b"trust-gossip/epoch-binding/v1";
const POLICY_DOMAIN: &[u8] = b"trust-gossip/policy-signature/v1";
const NODE_KEY_DOMAIN: &[u8] = b"trust-gossip/node-epoch-key/v1";

pub const BINDING_LEN: usize = NODE_ID_LEN + 8 + 32 + 64;
pub const BUNDLE_LEN: usize = BINDING_LEN + 64;

pub type Epoch = u64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EpochConfig {
    /// Seconds (simulation rounds) per epoch.
    pub epoch_length: u64,
    /// How many epochs ahead of the current one a key may be requested.
    pub prefetch_window: u64,
}

impl Default for EpochConfig {
    fn default() -> Self {
        EpochConfig {
            epoch_length: 1000,
            prefetch_window: 1,
        }
    }
}

impl EpochConfig {
    pub fn epoch_of(&self, now: Timestamp) -> Epoch {
        now / self.epoch_length.max(1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct EpochIdentity {
    pub node: NodeId,
    pub epoch: Epoch,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct MasterPublicKey(pub [u8; 32]);

/// PKG certificate over `(node, epoch, verification key)`.
///
/// Encoding: `node (8) || epoch (8, big-endian) || verification key (32) ||
/// PKG signature (64)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Binding {
    pub identity: EpochIdentity,
    pub verification_key: [u8; 32],
    pub pkg_signature: [u8; 64],
}

fn binding_message(identity: EpochIdentity, vk: &[u8; 32]) -> Vec<u8> {
    let mut msg = Vec::with_capacity(BINDING_DOMAIN.len() + 48);
    msg.extend_from_slice(BINDING_DOMAIN);
    msg.extend_from_slice(identity.node.as_bytes());
    msg.extend_from_slice(&identity.epoch.to_be_bytes());
    msg.extend_from_slice(vk);
    msg
}

fn policy_message(identity: EpochIdentity, policy: &Policy) -> Vec<u8> {
    let mut msg = Vec::with_capacity(POLICY_DOMAIN.len() + 56);
    msg.extend_from_slice(POLICY_DOMAIN);
    msg.extend_from_slice(identity.node.as_bytes());
    msg.extend_from_slice(&identity.epoch.to_be_bytes());
    msg.extend_from_slice(&policy.encode());
    msg
}

impl Binding {
    pub fn encode(&self) -> [u8; BINDING_LEN] {
        let mut out = [0u8; BINDING_LEN];
        out[0..8].copy_from_slice(self.identity.node.as_bytes());
        out[8..16].copy_from_slice(&self.identity.epoch.to_be_bytes());
        out[16..48].copy_from_slice(&self.verification_key);
        out[48..112].copy_from_slice(&self.pkg_signature);
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        if bytes.len() != BINDING_LEN {
            return Err(Error::Decode(format!(
                "binding must be {BINDING_LEN} bytes, got {}",
                bytes.len()
            )));
        }
        Ok(Binding {
            identity: EpochIdentity {
                node: NodeId(bytes[0..8].try_into().unwrap()),
                epoch: u64::from_be_bytes(bytes[8..16].try_into().unwrap()),
            },
            verification_key: bytes[16..48].try_into().unwrap(),
            pkg_signature: bytes[48..112].try_into().unwrap(),
        })
    }

    pub fn verify(&self, master: &MasterPublicKey) -> bool {
        let Ok(mk) = VerifyingKey::from_bytes(&master.0) else {
            return false;
        };
        mk.verify(
            &binding_message(self.identity, &self.verification_key),
            &Signature::from_bytes(&self.pkg_signature),
        )
        .is_ok()
    }
}

/// A node's signing key for one epoch.
#[derive(Clone)]
pub struct EpochKey {
    signing_key: SigningKey,
    binding: Binding,
}

impl std::fmt::Debug for EpochKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("EpochKey")
            .field("identity", &self.binding.identity)
            .finish_non_exhaustive()
    }
}

impl EpochKey {
    pub fn identity(&self) -> EpochIdentity {
        self.binding.identity
    }

    pub fn binding(&self) -> &Binding {
        &self.binding
    }

    /// Signs `policy` for this key's `(node, epoch)`. Fails with
    /// [`Error::StaleKey`] unless `now` falls in the key's epoch.
    pub fn sign_policy(
        &self,
        policy: &Policy,
        now: Timestamp,
        epochs: &EpochConfig,
    ) -> Result<SignatureBundle> {
        let current = epochs.epoch_of(now);
        if current != self.binding.identity.epoch {
            return Err(Error::StaleKey {
                key_epoch: self.binding.identity.epoch,
                current,
            });
        }
        let sig = self
            .signing_key
            .sign(&policy_message(self.binding.identity, policy));
        Ok(SignatureBundle {
            binding: self.binding,
            policy_signature: sig.to_bytes(),
        })
    }
}

/// What actually backs a policy signature: the PKG binding plus the node's
/// signature over `(node, epoch, policy)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SignatureBundle {
    pub binding: Binding,
    pub policy_signature: [u8; 64],
}

impl SignatureBundle {
    pub fn encode(&self) -> [u8; BUNDLE_LEN] {
        let mut out = [0u8; BUNDLE_LEN];
        out[..BINDING_LEN].copy_from_slice(&self.binding.encode());
        out[BINDING_LEN..].copy_from_slice(&self.policy_signature);
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        if bytes.len() != BUNDLE_LEN {
            return Err(Error::Decode(format!(
                "signature bundle must be {BUNDLE_LEN} bytes, got {}",
                bytes.len()
            )));
        }
        Ok(SignatureBundle {
            binding: Binding::decode(&bytes[..BINDING_LEN])?,
            policy_signature: bytes[BINDING_LEN..].try_into().unwrap(),
        })
    }

    /// 64-byte reference stored in a trust entry's signature slot.
    pub fn reference(&self) -> SignatureBytes {
        SignatureBytes(Sha512::digest(self.encode()).into())
    }
}

/// True iff `bundle` proves that the PKG-issued key for `(id, epoch)` signed
/// `policy`. Needs nothing but the master public key.
pub fn verify_policy_signature(
    master: &MasterPublicKey,
    id: NodeId,
    epoch: Epoch,
    policy: &Policy,
    bundle: &SignatureBundle,
) -> bool {
    let identity = EpochIdentity { node: id, epoch };
    if bundle.binding.identity != identity || !bundle.binding.verify(master) {
        return false;
    }
    let Ok(vk) = VerifyingKey::from_bytes(&bundle.binding.verification_key) else {
        return false;
    };
    vk.verify(
        &policy_message(identity, policy),
        &Signature::from_bytes(&bundle.policy_signature),
    )
    .is_ok()
}

/// The key generator: master key, denylist and admission policy.
pub struct Pkg {
    master: SigningKey,
    denylist: BTreeSet<NodeId>,
    admitted_issuers: IssuerSet,
    epochs: EpochConfig,
}

impl Pkg {
    pub fn init(seed: [u8; 32], admitted_issuers: IssuerSet, epochs: EpochConfig) -> Self {
        Pkg {
            master: SigningKey::from_bytes(&seed),
            denylist: BTreeSet::new(),
            admitted_issuers,
            epochs,
        }
    }

    pub fn master_public(&self) -> MasterPublicKey {
        MasterPublicKey(self.master.verifying_key().to_bytes())
    }

    pub fn epochs(&self) -> &EpochConfig {
        &self.epochs
    }

    pub fn denylist(&self) -> &BTreeSet<NodeId> {
        &self.denylist
    }

    pub fn is_denied(&self, id: NodeId) -> bool {
        self.denylist.contains(&id)
    }

    /// Stops all further key issuance for `id`. Keys already handed out stay
    /// valid for their epoch.
    pub fn deny(&mut self, id: NodeId) {
        self.denylist.insert(id);
    }

    /// Issues `id`'s key for `epoch`, which must lie in
    /// `[current, current + prefetch_window]`.
    pub fn get_key(
        &self,
        id: NodeId,
        epoch: Epoch,
        certificate: &Certificate,
        now: Timestamp,
    ) -> Result<EpochKey> {
        if !self.admitted_issuers.admits(certificate, id) {
            return Err(Error::Unauthorised(id));
        }
        if self.is_denied(id) {
            return Err(Error::Revoked(id));
        }
        let first = self.epochs.epoch_of(now);
        let last = first + self.epochs.prefetch_window;
        if epoch < first || epoch > last {
            return Err(Error::EpochOutOfRange {
                requested: epoch,
                first,
                last,
            });
        }
        let identity = EpochIdentity { node: id, epoch };
        let signing_key = self.derive_node_key(identity);
        let vk = signing_key.verifying_key().to_bytes();
        let pkg_signature = self.master.sign(&binding_message(identity, &vk)).to_bytes();
        Ok(EpochKey {
            signing_key,
            binding: Binding {
                identity,
                verification_key: vk,
                pkg_signature,
            },
        })
    }

    // Keys are a function of the master secret and identity, so re-requesting
    // an epoch yields the same key.
    fn derive_node_key(&self, identity: EpochIdentity) -> SigningKey {
        let mut h = Sha512::new();
        h.update(NODE_KEY_DOMAIN);
        h.update(self.master.to_bytes());
        h.update(identity.node.as_bytes());
        h.update(identity.epoch.to_be_bytes());
        let out = h.finalize();
        SigningKey::from_bytes(&out[..32].try_into().unwrap())
    }
}

type VerifiedKey = (MasterPublicKey, SignatureBytes, NodeId, Policy);

/// Content-addressed store of signature bundles, keyed by their reference.
///
/// Also remembers which (master, reference, subject, policy) tuples already
/// verified, so an entry seen many times is checked once.
#[derive(Debug, Clone, Default)]
pub struct BundleTable {
    bundles: HashMap<SignatureBytes, SignatureBundle>,
    verified: RefCell<HashSet<VerifiedKey>>,
}

impl BundleTable {
    pub fn publish(&mut self, bundle: SignatureBundle) -> SignatureBytes {
        let r = bundle.reference();
        self.bundles.insert(r, bundle);
        r
    }

    pub fn get(&self, reference: &SignatureBytes) -> Option<&SignatureBundle> {
        self.bundles.get(reference)
    }

    pub fn len(&self) -> usize {
        self.bundles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bundles.is_empty()
    }
}

/// Gate applied to every entry received during sync.
pub trait SignatureCheck {
    fn check(&self, entry: &TrustEntry, now: Timestamp) -> bool;
}

/// Accepts an entry iff its signature slot references a bundle that verifies
/// for `(subject, epoch of attested_at, policy)` under the master key.
///
/// Holds only the master public key and the public bundle table; per-node
/// verification keys come from PKG-signed bindings inside the bundles.
pub struct BundleVerifier<'a> {
    pub master: MasterPublicKey,
    pub bundles: &'a BundleTable,
    pub epochs: EpochConfig,
    /// Also reject entries signed in an epoch earlier than the current one.
    pub reject_stale_epochs: bool,
}

impl SignatureCheck for BundleVerifier<'_> {
    fn check(&self, entry: &TrustEntry, now: Timestamp) -> bool {
        let Some(bundle) = self.bundles.get(&entry.signature) else {
            return false;
        };
        let epoch = self.epochs.epoch_of(entry.policy.attested_at);
        if self.reject_stale_epochs && epoch < self.epochs.epoch_of(now) {
            return false;
        }
        let key = (self.master, entry.signature, entry.subject, entry.policy);
        if self.bundles.verified.borrow().contains(&key) {
            return true;
        }
        let ok = verify_policy_signature(&self.master, entry.subject, epoch, &entry.policy, bundle);
        if ok {
            self.bundles.verified.borrow_mut().insert(key);
        }
        ok
    }
}
