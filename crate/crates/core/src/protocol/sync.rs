use crate::bloom::BloomFilter;
use crate::entry::{Timestamp, TrustEntry};
use crate::extension::SignatureCheck;
use crate::ids::NodeId;
use crate::store::{MergeRule, TrustStore};

use super::Variant;

/// Entries the prover sends to a verifier that advertised `verifier_filter`.
///
/// `Original` sends entries whose digest is absent from the filter; `NoBloom`
/// sends everything. Entries about the verifier itself are never sent.
/// `Naive` never syncs and yields nothing.
pub fn sync_select(
    prover_store: &TrustStore,
    verifier_filter: &BloomFilter,
    verifier_id: NodeId,
    variant: Variant,
) -> Vec<TrustEntry> {
    let candidates = prover_store
        .entries()
        .iter()
        .filter(|e| e.subject != verifier_id);
    match variant {
        Variant::Original => candidates
            .filter(|e| !verifier_filter.contains(&e.digest()))
            .copied()
            .collect(),
        Variant::NoBloom => candidates.copied().collect(),
        Variant::Naive => Vec::new(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SyncApplied {
    /// Passed the validity and signature checks and went through the merge.
    pub accepted: usize,
    pub rejected: usize,
    /// Entries naming the receiving node itself.
    pub skipped: usize,
    /// Accepted entries that added or replaced a store entry.
    pub changed: usize,
}

/// Merges received entries into the verifier's store.
///
/// An entry is accepted iff it is still valid at `now` and, when a signature
/// check is given, its signature verifies.
pub fn sync_apply(
    verifier_store: &mut TrustStore,
    entries: &[TrustEntry],
    now: Timestamp,
    sig_check: Option<&dyn SignatureCheck>,
    rule: MergeRule,
) -> SyncApplied {
    let mut out = SyncApplied::default();
    for e in entries {
        if e.subject == verifier_store.owner() {
            out.skipped += 1;
            continue;
        }
        let valid = e.policy.is_valid_at(now) && sig_check.is_none_or(|c| c.check(e, now));
        if !valid {
            out.rejected += 1;
            continue;
        }
        out.accepted += 1;
        let outcome = verifier_store
            .insert(*e, rule)
            .expect("self entries are skipped above");
        if outcome.changed() {
            out.changed += 1;
        }
    }
    out
}
