use crate::bloom::BloomFilter;
use crate::cert::IssuerSet;
use crate::entry::{Policy, ProtocolId, Timestamp, TrustEntry, SIGNATURE_LEN};
use crate::error::{Error, Result};
use crate::extension::{
    verify_policy_signature, BundleTable, BundleVerifier, EpochConfig, MasterPublicKey,
    SignatureCheck, BUNDLE_LEN,
};
use crate::ids::NodeId;
use crate::store::MergeRule;

use super::message::{choose_protocol, Message, MessageKind, TerminateReason, WireCosts};
use super::node::NodeState;
use super::oracle::{splitmix64, AttestationOracle};
use super::session::{connect, verify, NextAction, Session};
use super::sync::{sync_apply, sync_select, SyncApplied};
use super::Variant;

/// Network-wide protocol constants.
#[derive(Debug, Clone)]
pub struct ProtocolConfig {
    pub variant: Variant,
    pub merge_rule: MergeRule,
    /// Criteria code written into every policy a verifier creates.
    pub criteria_code: u16,
    /// Policies expire this many seconds after attestation; `None` never expires.
    pub policy_ttl: Option<u64>,
    pub wire: WireCosts,
    /// Fixed cost of channel setup per interaction.
    pub key_agreement_bytes: usize,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        ProtocolConfig {
            variant: Variant::Original,
            merge_rule: MergeRule::NewestWins,
            criteria_code: 1,
            policy_ttl: None,
            wire: WireCosts::default(),
            key_agreement_bytes: 0,
        }
    }
}

impl ProtocolConfig {
    pub fn with_variant(variant: Variant) -> Self {
        ProtocolConfig {
            variant,
            ..Default::default()
        }
    }
}

/// Shared state for the signing extension.
pub struct ExtensionEnv<'a> {
    pub master: MasterPublicKey,
    pub epochs: EpochConfig,
    pub bundles: &'a mut BundleTable,
    pub reject_stale_epochs: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TraceRecord {
    pub round: u64,
    pub from: NodeId,
    pub to: NodeId,
    pub kind: MessageKind,
    pub bytes: usize,
}

pub trait TraceSink {
    fn record(&mut self, record: TraceRecord);
}

impl TraceSink for Vec<TraceRecord> {
    fn record(&mut self, record: TraceRecord) {
        self.push(record);
    }
}

/// Everything a pairwise run needs besides the two nodes.
pub struct InteractionEnv<'a> {
    pub config: &'a ProtocolConfig,
    pub oracle: &'a mut dyn AttestationOracle,
    /// Allowed certificate issuers; `Some` makes the network permissioned.
    pub gate: Option<&'a IssuerSet>,
    pub extension: Option<ExtensionEnv<'a>>,
    pub trace: Option<&'a mut dyn TraceSink>,
    pub now: Timestamp,
    pub round: u64,
    /// Per-interaction seed for attestation nonces.
    pub nonce_seed: u64,
}

impl<'a> InteractionEnv<'a> {
    pub fn new(
        config: &'a ProtocolConfig,
        oracle: &'a mut dyn AttestationOracle,
        now: Timestamp,
    ) -> Self {
        InteractionEnv {
            config,
            oracle,
            gate: None,
            extension: None,
            trace: None,
            now,
            round: now,
            nonce_seed: now,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Traffic {
    pub hello: u64,
    /// MissingEntries payloads.
    pub sync: u64,
    pub attest: u64,
    /// Policy offers and policy signatures.
    pub extension: u64,
    pub key_agreement: u64,
    /// Bytes beyond the 64-byte slot if signature bundles travelled in full.
    pub bundle_overhead: u64,
    pub messages: u64,
}

impl Traffic {
    pub fn total(&self) -> u64 {
        self.hello + self.sync + self.attest + self.extension + self.key_agreement
    }

    pub fn add(&mut self, other: &Traffic) {
        self.hello += other.hello;
        self.sync += other.sync;
        self.attest += other.attest;
        self.extension += other.extension;
        self.key_agreement += other.key_agreement;
        self.bundle_overhead += other.bundle_overhead;
        self.messages += other.messages;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DirectionPath {
    /// Verifier already trusted the prover.
    Trusted,
    /// Prover was attested in this direction.
    Attested,
    /// Attestation was needed and did not establish trust.
    Failed,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DirectionReport {
    pub verifier: NodeId,
    pub prover: NodeId,
    pub path: DirectionPath,
    pub protocol: Option<ProtocolId>,
    pub entries_sent: usize,
    pub sync: Option<SyncApplied>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Outcome {
    Completed,
    /// Flow stopped early; the error names the cause.
    Terminated(Error),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InteractionReport {
    pub first_verifier: NodeId,
    pub directions: Vec<DirectionReport>,
    pub outcome: Outcome,
    /// Oracle invocations.
    pub attestations_attempted: u32,
    /// Attestations that ended with the verifier storing the prover.
    pub attestations_succeeded: u32,
    pub sync_exchanges: u32,
    pub traffic: Traffic,
}

impl InteractionReport {
    pub fn completed(&self) -> bool {
        self.outcome == Outcome::Completed
    }
}

struct Run<'e, 'a> {
    env: &'e mut InteractionEnv<'a>,
    traffic: Traffic,
}

impl Run<'_, '_> {
    fn send(&mut self, from: NodeId, to: NodeId, msg: &Message) {
        let bytes = msg.wire_len(&self.env.config.wire);
        let kind = msg.kind();
        match kind {
            MessageKind::Hello => self.traffic.hello += bytes as u64,
            MessageKind::MissingEntries => self.traffic.sync += bytes as u64,
            MessageKind::AttestChallenge | MessageKind::AttestEvidence => {
                self.traffic.attest += bytes as u64
            }
            MessageKind::PolicyOffer | MessageKind::PolicySignature => {
                self.traffic.extension += bytes as u64
            }
            MessageKind::SyncSignal | MessageKind::Terminate => {}
        }
        self.traffic.messages += 1;
        if let Some(trace) = self.env.trace.as_deref_mut() {
            trace.record(TraceRecord {
                round: self.env.round,
                from,
                to,
                kind,
                bytes,
            });
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AttestOutcome {
    pub success: bool,
    pub policy: Option<Policy>,
}

/// Runs one attestation of `prover` by `verifier` over `protocol_id`.
///
/// On success the verifier has stored a fresh policy for the prover (signed by
/// the prover when the extension is on). Neither store changes on failure.
fn attest(
    run: &mut Run<'_, '_>,
    verifier: &mut NodeState,
    prover: &mut NodeState,
    protocol_id: ProtocolId,
    direction: u64,
) -> Result<AttestOutcome> {
    let nonce = splitmix64(run.env.nonce_seed ^ direction.wrapping_mul(0x9e37_79b9_7f4a_7c15))
        .to_be_bytes();
    run.send(
        verifier.id(),
        prover.id(),
        &Message::AttestChallenge { protocol_id, nonce },
    );
    let ok = run
        .env
        .oracle
        .attest(prover.id(), verifier.id(), protocol_id, nonce);
    run.send(
        prover.id(),
        verifier.id(),
        &Message::AttestEvidence {
            protocol_id,
            evidence: Vec::new(),
        },
    );
    if !ok {
        return Ok(AttestOutcome {
            success: false,
            policy: None,
        });
    }

    let now = run.env.now;
    let config = run.env.config;
    let expires_at = config.policy_ttl.map_or(0, |ttl| now + ttl.max(1));
    let policy = Policy::new(config.criteria_code, now, expires_at, protocol_id)?;
    let mut entry = TrustEntry::new(prover.id(), policy);

    if run.env.extension.is_some() {
        run.send(verifier.id(), prover.id(), &Message::PolicyOffer { policy });
        let ext = run.env.extension.as_mut().unwrap();
        // a prover without a key for the current epoch cannot complete
        let signed = prover
            .epoch_key
            .as_ref()
            .and_then(|k| k.sign_policy(&policy, now, &ext.epochs).ok())
            .map(|bundle| (ext.bundles.publish(bundle), bundle));
        let Some((reference, bundle)) = signed else {
            return Ok(AttestOutcome {
                success: false,
                policy: None,
            });
        };
        run.send(
            prover.id(),
            verifier.id(),
            &Message::PolicySignature {
                signature: reference,
            },
        );
        run.traffic.bundle_overhead += (BUNDLE_LEN - SIGNATURE_LEN) as u64;
        let ext = run.env.extension.as_ref().unwrap();
        let epoch = ext.epochs.epoch_of(now);
        if !verify_policy_signature(&ext.master, prover.id(), epoch, &policy, &bundle) {
            return Ok(AttestOutcome {
                success: false,
                policy: None,
            });
        }
        entry = entry.with_signature(reference);
    }

    verifier.insert(entry, config.merge_rule)?;
    Ok(AttestOutcome {
        success: true,
        policy: Some(policy),
    })
}

fn sync(
    run: &mut Run<'_, '_>,
    verifier: &mut NodeState,
    prover: &NodeState,
    verifier_filter: &BloomFilter,
) -> (usize, SyncApplied) {
    let config = run.env.config;
    let entries = sync_select(
        prover.store(),
        verifier_filter,
        verifier.id(),
        config.variant,
    );
    let msg = Message::MissingEntries { entries };
    run.send(prover.id(), verifier.id(), &msg);
    let Message::MissingEntries { entries } = msg else {
        unreachable!()
    };
    let signed = entries.iter().filter(|e| !e.signature.is_zero()).count();
    run.traffic.bundle_overhead += (signed * (BUNDLE_LEN - SIGNATURE_LEN)) as u64;

    let now = run.env.now;
    let applied = match run.env.extension.as_ref() {
        Some(ext) => {
            let checker = BundleVerifier {
                master: ext.master,
                bundles: ext.bundles,
                epochs: ext.epochs,
                reject_stale_epochs: ext.reject_stale_epochs,
            };
            apply(verifier, &entries, now, Some(&checker), config.merge_rule)
        }
        None => apply(verifier, &entries, now, None, config.merge_rule),
    };
    (entries.len(), applied)
}

fn apply(
    node: &mut NodeState,
    entries: &[TrustEntry],
    now: Timestamp,
    check: Option<&dyn SignatureCheck>,
    rule: MergeRule,
) -> SyncApplied {
    let applied = sync_apply(node.store_mut_quiet(), entries, now, check, rule);
    if applied.changed > 0 {
        node.note_store_changed();
    }
    applied
}

/// Runs one verifier→prover direction. Returns `Err` when the flow must stop.
fn direction(
    run: &mut Run<'_, '_>,
    session: &mut Session,
    verifier: &mut NodeState,
    prover: &mut NodeState,
    verifier_filter: &BloomFilter,
    index: u64,
    report: &mut InteractionReport,
) -> std::result::Result<(), Error> {
    let variant = run.env.config.variant;
    let now = run.env.now;
    let action = verify(session, verifier.store(), now, variant)?;
    let mut dir = DirectionReport {
        verifier: verifier.id(),
        prover: prover.id(),
        path: DirectionPath::Trusted,
        protocol: None,
        entries_sent: 0,
        sync: None,
    };

    let do_sync = match action {
        NextAction::Complete => false,
        NextAction::StartSync => {
            run.send(verifier.id(), prover.id(), &Message::SyncSignal);
            true
        }
        NextAction::StartAttest => {
            let Some(protocol) = choose_protocol(&verifier.protocols, &session.peer_protocols)
            else {
                run.send(
                    verifier.id(),
                    prover.id(),
                    &Message::Terminate {
                        reason: TerminateReason::IncompatibleProtocols,
                    },
                );
                dir.path = DirectionPath::Failed;
                report.directions.push(dir);
                session.fail();
                return Err(Error::IncompatibleProtocols {
                    verifier: verifier.id(),
                    prover: prover.id(),
                });
            };
            dir.protocol = Some(protocol);
            report.attestations_attempted += 1;
            let outcome = attest(run, verifier, prover, protocol, index)?;
            if !outcome.success {
                run.send(
                    verifier.id(),
                    prover.id(),
                    &Message::Terminate {
                        reason: TerminateReason::AttestationFailed,
                    },
                );
                dir.path = DirectionPath::Failed;
                report.directions.push(dir);
                session.fail();
                return Err(Error::AttestationFailed {
                    verifier: verifier.id(),
                    prover: prover.id(),
                });
            }
            report.attestations_succeeded += 1;
            dir.path = DirectionPath::Attested;
            variant != Variant::Naive
        }
    };

    if do_sync {
        session.phase = super::session::Phase::Syncing;
        let (sent, applied) = sync(run, verifier, prover, verifier_filter);
        dir.entries_sent = sent;
        dir.sync = Some(applied);
        report.sync_exchanges += 1;
    }
    session.finish_direction(true);
    report.directions.push(dir);
    Ok(())
}

/// Full pairwise run: Connect, then Verify → (Attest) → Sync with the lower
/// node ID as verifier, then the same with roles switched.
///
/// A refused connection, missing common protocol or failed attestation ends
/// the whole flow; the report carries the cause. Only precondition violations
/// are returned as `Err`.
pub fn run_pairwise(
    a: &mut NodeState,
    b: &mut NodeState,
    env: &mut InteractionEnv<'_>,
) -> Result<InteractionReport> {
    if a.id() == b.id() {
        return Err(Error::InvalidInput(format!(
            "pairwise run needs two distinct nodes, got {} twice",
            a.id()
        )));
    }
    let (first, second) = if a.id() < b.id() { (a, b) } else { (b, a) };
    let mut run = Run {
        env,
        traffic: Traffic::default(),
    };
    let mut report = InteractionReport {
        first_verifier: first.id(),
        directions: Vec::with_capacity(2),
        outcome: Outcome::Completed,
        attestations_attempted: 0,
        attestations_succeeded: 0,
        sync_exchanges: 0,
        traffic: Traffic::default(),
    };

    run.traffic.key_agreement += run.env.config.key_agreement_bytes as u64;
    let variant = run.env.config.variant;
    let connected = connect(first, second, run.env.now, variant, run.env.gate);
    let connected = match connected {
        Ok(c) => c,
        Err(e) => {
            report.outcome = Outcome::Terminated(e);
            report.traffic = run.traffic;
            return Ok(report);
        }
    };
    let [hello_first, hello_second] = &connected.hellos;
    run.send(first.id(), second.id(), hello_first);
    run.send(second.id(), first.id(), hello_second);
    let (mut s_first, mut s_second) = (connected.a, connected.b);

    // each prover filters against the snapshot the verifier advertised
    let (filter_first, filter_second) = (s_second.peer_filter.clone(), s_first.peer_filter.clone());
    let result = direction(
        &mut run,
        &mut s_first,
        first,
        second,
        &filter_first,
        0,
        &mut report,
    )
    .and_then(|()| {
        s_second.finish_direction(false);
        direction(
            &mut run,
            &mut s_second,
            second,
            first,
            &filter_second,
            1,
            &mut report,
        )
    });
    match result {
        Ok(()) => s_first.finish_direction(false),
        Err(e) => {
            s_first.fail();
            s_second.fail();
            report.outcome = Outcome::Terminated(e);
        }
    }
    debug_assert!(s_first.is_terminal() && s_second.is_terminal());
    report.traffic = run.traffic;
    Ok(report)
}
