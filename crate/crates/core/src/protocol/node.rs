use crate::bloom::BloomFilter;
use crate::cert::Certificate;
use crate::entry::{Timestamp, TrustEntry};
use crate::extension::EpochKey;
use crate::ids::NodeId;
use crate::store::{InsertOutcome, MergeRule, TrustStore};

use super::message::AttestationProtocolSet;

/// Everything one node brings to an interaction.
#[derive(Debug, Clone)]
pub struct NodeState {
    id: NodeId,
    pub protocols: AttestationProtocolSet,
    pub certificate: Option<Certificate>,
    /// Current epoch signing key when the signing extension is on.
    pub epoch_key: Option<EpochKey>,
    store: TrustStore,
    filter: BloomFilter,
    filter_stale: bool,
}

impl NodeState {
    pub fn new(id: NodeId, protocols: AttestationProtocolSet) -> Self {
        NodeState {
            id,
            protocols,
            certificate: None,
            epoch_key: None,
            store: TrustStore::new(id),
            filter: BloomFilter::default(),
            filter_stale: false,
        }
    }

    pub fn with_certificate(mut self, cert: Certificate) -> Self {
        self.certificate = Some(cert);
        self
    }

    pub fn id(&self) -> NodeId {
        self.id
    }

    pub fn store(&self) -> &TrustStore {
        &self.store
    }

    /// Mutable access marks the advertised filter for rebuild.
    pub fn store_mut(&mut self) -> &mut TrustStore {
        self.filter_stale = true;
        &mut self.store
    }

    pub fn trusts(&self, peer: NodeId, now: Timestamp) -> bool {
        self.store.contains(peer, now)
    }

    pub fn insert(&mut self, entry: TrustEntry, rule: MergeRule) -> crate::Result<InsertOutcome> {
        let outcome = self.store.insert(entry, rule)?;
        if outcome.changed() {
            self.filter_stale = true;
        }
        Ok(outcome)
    }

    pub(crate) fn store_mut_quiet(&mut self) -> &mut TrustStore {
        &mut self.store
    }

    pub(crate) fn note_store_changed(&mut self) {
        self.filter_stale = true;
    }

    /// Removes expired entries and returns their subjects.
    pub fn expire(&mut self, now: Timestamp) -> Vec<crate::NodeId> {
        let removed = self.store.expire(now);
        if !removed.is_empty() {
            self.filter_stale = true;
        }
        removed
    }

    /// Filter snapshot to advertise in Hello, rebuilt first if the store
    /// changed since the last build.
    pub fn advertised_filter(&mut self, now: Timestamp) -> BloomFilter {
        if self.filter_stale {
            self.filter = BloomFilter::from_store(&self.store, now);
            self.filter_stale = false;
        }
        self.filter.clone()
    }

    pub fn filter_is_stale(&self) -> bool {
        self.filter_stale
    }
}
