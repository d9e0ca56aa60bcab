use std::collections::HashMap;

use crate::entry::{Timestamp, TrustEntry};
use crate::error::{Error, Result};
use crate::ids::NodeId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MergeRule {
    /// One entry per subject; the newer `attested_at` wins, ties keep the incumbent.
    #[default]
    NewestWins,
    KeepAll,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InsertOutcome {
    Added,
    Replaced,
    /// The incumbent was at least as new; nothing changed.
    Kept,
}

impl InsertOutcome {
    pub fn changed(self) -> bool {
        !matches!(self, InsertOutcome::Kept)
    }
}

/// A node's list of trusted entries.
///
/// Entries keep insertion order; the subject index is only used for lookup.
#[derive(Debug, Clone)]
pub struct TrustStore {
    owner: NodeId,
    entries: Vec<TrustEntry>,
    index: HashMap<NodeId, Vec<usize>>,
}

impl PartialEq for TrustStore {
    fn eq(&self, other: &Self) -> bool {
        self.owner == other.owner && self.entries == other.entries
    }
}

impl Eq for TrustStore {}

impl TrustStore {
    pub fn new(owner: NodeId) -> Self {
        TrustStore {
            owner,
            entries: Vec::new(),
            index: HashMap::new(),
        }
    }

    pub fn owner(&self) -> NodeId {
        self.owner
    }

    pub fn entries(&self) -> &[TrustEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn insert(&mut self, entry: TrustEntry, rule: MergeRule) -> Result<InsertOutcome> {
        if entry.subject == self.owner {
            return Err(Error::SelfEntry(self.owner));
        }
        let slots = self.index.entry(entry.subject).or_default();
        match rule {
            MergeRule::NewestWins if !slots.is_empty() => {
                let pos = slots[0];
                let incumbent = &mut self.entries[pos];
                if entry.policy.attested_at > incumbent.policy.attested_at {
                    *incumbent = entry;
                    Ok(InsertOutcome::Replaced)
                } else {
                    Ok(InsertOutcome::Kept)
                }
            }
            _ => {
                slots.push(self.entries.len());
                self.entries.push(entry);
                Ok(InsertOutcome::Added)
            }
        }
    }

    /// Entries currently held for `subject`, expired or not.
    pub fn get(&self, subject: NodeId) -> impl Iterator<Item = &TrustEntry> {
        self.index
            .get(&subject)
            .into_iter()
            .flatten()
            .map(|&i| &self.entries[i])
    }

    /// True iff an entry for `subject` exists that is still valid at `now`.
    pub fn contains(&self, subject: NodeId, now: Timestamp) -> bool {
        self.get(subject).any(|e| e.policy.is_valid_at(now))
    }

    /// Drops entries that expired before `now` and returns their subjects in store order.
    ///
    /// The caller owns any digest built from this store and must rebuild it.
    pub fn expire(&mut self, now: Timestamp) -> Vec<NodeId> {
        if self.entries.iter().all(|e| e.policy.is_valid_at(now)) {
            return Vec::new();
        }
        let mut removed = Vec::new();
        self.entries.retain(|e| {
            let keep = e.policy.is_valid_at(now);
            if !keep {
                removed.push(e.subject);
            }
            keep
        });
        self.reindex();
        removed
    }

    /// Number of distinct subjects, valid or not.
    pub fn distinct_subjects(&self) -> usize {
        self.index.len()
    }

    /// Number of distinct subjects with at least one entry valid at `now`.
    pub fn distinct_valid_subjects(&self, now: Timestamp) -> usize {
        self.index
            .values()
            .filter(|slots| {
                slots
                    .iter()
                    .any(|&i| self.entries[i].policy.is_valid_at(now))
            })
            .count()
    }

    fn reindex(&mut self) {
        self.index.clear();
        for (i, e) in self.entries.iter().enumerate() {
            self.index.entry(e.subject).or_default().push(i);
        }
    }
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;

    use proptest::prelude::*;

    use super::*;
    use crate::entry::Policy;

    fn entry(subject: u64, attested_at: u64, expires_at: u64) -> TrustEntry {
        TrustEntry::new(
            NodeId::from(subject),
            Policy::new(1, attested_at, expires_at, 1).unwrap(),
        )
    }

    fn owner() -> NodeId {
        NodeId::from(0)
    }

    #[test]
    fn insert_into_empty() {
        let mut s = TrustStore::new(owner());
        assert_eq!(
            s.insert(entry(1, 5, 0), MergeRule::NewestWins),
            Ok(InsertOutcome::Added)
        );
        assert_eq!(s.len(), 1);
        assert!(s.contains(NodeId::from(1), 5));
    }

    #[test]
    fn newer_replaces_and_older_is_ignored() {
        let mut s = TrustStore::new(owner());
        s.insert(entry(1, 5, 0), MergeRule::NewestWins).unwrap();
        assert_eq!(
            s.insert(entry(1, 9, 0), MergeRule::NewestWins),
            Ok(InsertOutcome::Replaced)
        );
        assert_eq!(s.len(), 1);
        assert_eq!(s.entries()[0].policy.attested_at, 9);
        assert_eq!(
            s.insert(entry(1, 7, 0), MergeRule::NewestWins),
            Ok(InsertOutcome::Kept)
        );
        assert_eq!(s.entries()[0].policy.attested_at, 9);
    }

    #[test]
    fn tie_keeps_incumbent() {
        let mut s = TrustStore::new(owner());
        let first = entry(1, 5, 0);
        let mut second = entry(1, 5, 0);
        second.policy.criteria_code = 99;
        s.insert(first, MergeRule::NewestWins).unwrap();
        assert_eq!(
            s.insert(second, MergeRule::NewestWins),
            Ok(InsertOutcome::Kept)
        );
        assert_eq!(s.entries()[0], first);
    }

    #[test]
    fn keep_all_appends() {
        let mut s = TrustStore::new(owner());
        s.insert(entry(1, 5, 0), MergeRule::KeepAll).unwrap();
        s.insert(entry(1, 5, 0), MergeRule::KeepAll).unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s.distinct_valid_subjects(0), 1);
    }

    #[test]
    fn self_insertion_rejected() {
        let mut s = TrustStore::new(owner());
        assert_eq!(
            s.insert(entry(0, 1, 0), MergeRule::NewestWins),
            Err(Error::SelfEntry(owner()))
        );
        assert!(s.is_empty());
    }

    #[test]
    fn contains_respects_expiry() {
        let mut s = TrustStore::new(owner());
        assert!(!s.contains(NodeId::from(3), 0));
        s.insert(entry(3, 1, 10), MergeRule::NewestWins).unwrap();
        assert!(s.contains(NodeId::from(3), 10));
        assert!(!s.contains(NodeId::from(3), 11));
    }

    #[test]
    fn expire_nothing() {
        let mut s = TrustStore::new(owner());
        s.insert(entry(1, 1, 0), MergeRule::NewestWins).unwrap();
        s.insert(entry(2, 1, 100), MergeRule::NewestWins).unwrap();
        let before = s.clone();
        assert!(s.expire(50).is_empty());
        assert_eq!(s, before);
    }

    #[test]
    fn expire_everything() {
        let mut s = TrustStore::new(owner());
        s.insert(entry(1, 1, 2), MergeRule::NewestWins).unwrap();
        s.insert(entry(2, 1, 3), MergeRule::NewestWins).unwrap();
        assert_eq!(s.expire(10).len(), 2);
        assert!(s.is_empty());
        assert!(!s.contains(NodeId::from(1), 10));
    }

    #[test]
    fn expire_mixed_store_of_five() {
        let mut s = TrustStore::new(owner());
        // expires_at relative to now = 20: two lapse (10, 19), three survive (0, 20, 30)
        for (id, exp) in [(1, 10), (2, 0), (3, 19), (4, 20), (5, 30)] {
            s.insert(entry(id, 1, exp), MergeRule::NewestWins).unwrap();
        }
        let removed = s.expire(20);
        assert_eq!(removed, vec![NodeId::from(1), NodeId::from(3)]);
        assert_eq!(s.len(), 3);
        assert!(s.contains(NodeId::from(4), 20));
        // index stays consistent after compaction
        assert_eq!(s.get(NodeId::from(5)).count(), 1);
    }

    fn arb_entries() -> impl Strategy<Value = Vec<TrustEntry>> {
        prop::collection::vec((1u64..8, 1u64..50), 0..40)
            .prop_map(|v| v.into_iter().map(|(id, at)| entry(id, at, 0)).collect())
    }

    fn winners(s: &TrustStore) -> BTreeMap<NodeId, u64> {
        s.entries()
            .iter()
            .map(|e| (e.subject, e.policy.attested_at))
            .collect()
    }

    proptest! {
        #[test]
        fn newest_wins_is_idempotent(entries in arb_entries()) {
            let mut once = TrustStore::new(owner());
            let mut twice = TrustStore::new(owner());
            for e in &entries {
                once.insert(*e, MergeRule::NewestWins).unwrap();
                twice.insert(*e, MergeRule::NewestWins).unwrap();
                twice.insert(*e, MergeRule::NewestWins).unwrap();
            }
            prop_assert_eq!(once, twice);
        }

        #[test]
        fn merge_is_order_insensitive(entries in arb_entries(), seed in any::<u64>()) {
            use rand::{seq::SliceRandom, SeedableRng};
            let mut shuffled = entries.clone();
            shuffled.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            let mut a = TrustStore::new(owner());
            let mut b = TrustStore::new(owner());
            for e in &entries { a.insert(*e, MergeRule::NewestWins).unwrap(); }
            for e in &shuffled { b.insert(*e, MergeRule::NewestWins).unwrap(); }
            prop_assert_eq!(winners(&a), winners(&b));
            prop_assert_eq!(a.len(), winners(&a).len());
        }

        #[test]
        fn expired_subjects_never_reported(
            plan in prop::collection::vec((1u64..20, 1u64..10, 0u64..30), 0..30),
            now in 0u64..40,
        ) {
            let mut s = TrustStore::new(owner());
            for (id, at, ttl) in plan {
                let exp = if ttl == 0 { 0 } else { at + ttl };
                s.insert(entry(id, at, exp), MergeRule::KeepAll).unwrap();
            }
            let removed = s.expire(now);
            for id in removed {
                if !s.get(id).any(|_| true) {
                    prop_assert!(!s.contains(id, now));
                }
            }
            for e in s.entries() {
                prop_assert!(e.policy.is_valid_at(now));
            }
        }
    }
}
