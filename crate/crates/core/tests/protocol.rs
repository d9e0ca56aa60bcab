use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use trust_gossip::cert::{Issuer, IssuerSet};
use trust_gossip::extension::{BundleTable, EpochConfig, Pkg};
use trust_gossip::protocol::{
    run_pairwise, AlwaysSucceed, AttestationOracle, AttestationProtocolSet, DirectionPath,
    ExtensionEnv, InteractionEnv, MessageKind, NodeState, Outcome, ProtocolConfig, RateOracle,
    TraceRecord, Variant,
};
use trust_gossip::{Error, NodeId, ProtocolId};

fn node(id: u64, protocols: &[ProtocolId]) -> NodeState {
    NodeState::new(
        NodeId::from(id),
        AttestationProtocolSet::new(protocols.iter().copied()).unwrap(),
    )
}

fn pair(
    a: &mut NodeState,
    b: &mut NodeState,
    variant: Variant,
    oracle: &mut dyn AttestationOracle,
    now: u64,
) -> trust_gossip::protocol::InteractionReport {
    let config = ProtocolConfig::with_variant(variant);
    let mut env = InteractionEnv::new(&config, oracle, now);
    run_pairwise(a, b, &mut env).unwrap()
}

#[test]
fn cold_start_attests_both_ways_and_syncs() {
    let (mut a, mut b) = (node(1, &[1]), node(2, &[1]));
    let r = pair(&mut a, &mut b, Variant::Original, &mut AlwaysSucceed, 1);
    assert!(r.completed());
    assert_eq!(r.attestations_attempted, 2);
    assert_eq!(r.attestations_succeeded, 2);
    assert_eq!(r.sync_exchanges, 2);
    assert!(a.trusts(b.id(), 1) && b.trusts(a.id(), 1));
    assert_eq!(r.first_verifier, a.id());
    // Hello: 8 + 64 + 2 each way; both stores were empty so nothing else is sent
    assert_eq!(r.traffic.hello, 2 * 74);
    assert_eq!(r.traffic.sync, 0);
    assert_eq!(r.traffic.total(), 148);
}

#[test]
fn mutual_trust_means_sync_only() {
    let (mut a, mut b) = (node(1, &[1]), node(2, &[1]));
    pair(&mut a, &mut b, Variant::Original, &mut AlwaysSucceed, 1);
    let r = pair(&mut a, &mut b, Variant::Original, &mut AlwaysSucceed, 2);
    assert_eq!(r.attestations_attempted, 0);
    assert_eq!(r.sync_exchanges, 2);
    assert!(r
        .directions
        .iter()
        .all(|d| d.path == DirectionPath::Trusted));
}

#[test]
fn naive_never_gossips() {
    let (mut a, mut b, mut c) = (node(1, &[1]), node(2, &[1]), node(3, &[1]));
    pair(&mut b, &mut c, Variant::Naive, &mut AlwaysSucceed, 1);
    let r = pair(&mut a, &mut b, Variant::Naive, &mut AlwaysSucceed, 2);
    assert_eq!(r.attestations_attempted, 2);
    assert_eq!(r.sync_exchanges, 0);
    assert_eq!(r.traffic.sync, 0);
    assert_eq!(a.store().len(), 1);
    assert!(a.trusts(b.id(), 2) && !a.trusts(c.id(), 2));
    assert_eq!(b.store().len(), 2);
}

#[test]
fn order_of_arguments_does_not_matter_for_roles() {
    let (mut a, mut b) = (node(9, &[1]), node(4, &[1]));
    let mut trace: Vec<TraceRecord> = Vec::new();
    let config = ProtocolConfig::default();
    let mut oracle = AlwaysSucceed;
    let mut env = InteractionEnv::new(&config, &mut oracle, 3);
    env.trace = Some(&mut trace);
    let r = run_pairwise(&mut a, &mut b, &mut env).unwrap();
    assert_eq!(r.first_verifier, NodeId::from(4));
    let kinds: Vec<_> = trace.iter().map(|t| (t.from.to_u64(), t.kind)).collect();
    assert_eq!(
        kinds,
        vec![
            (4, MessageKind::Hello),
            (9, MessageKind::Hello),
            (4, MessageKind::AttestChallenge),
            (9, MessageKind::AttestEvidence),
            (9, MessageKind::MissingEntries),
            (9, MessageKind::AttestChallenge),
            (4, MessageKind::AttestEvidence),
            (4, MessageKind::MissingEntries),
        ]
    );
    assert!(trace.iter().all(|t| t.round == 3));
    let summed: usize = trace.iter().map(|t| t.bytes).sum();
    assert_eq!(summed as u64, r.traffic.total());
}

#[test]
fn self_pair_is_rejected() {
    let mut a = node(1, &[1]);
    let mut a2 = node(1, &[1]);
    let config = ProtocolConfig::default();
    let mut oracle = AlwaysSucceed;
    let mut env = InteractionEnv::new(&config, &mut oracle, 0);
    assert!(matches!(
        run_pairwise(&mut a, &mut a2, &mut env),
        Err(Error::InvalidInput(_))
    ));
}

/// B and C attest each other, then A meets B: A learns C without attesting it.
#[test]
fn transitivity() {
    let (mut a, mut b, mut c) = (node(1, &[1]), node(2, &[1]), node(3, &[1]));
    pair(&mut b, &mut c, Variant::Original, &mut AlwaysSucceed, 1);
    let mut attested = Vec::new();
    let mut oracle = |p: NodeId, v: NodeId, _: ProtocolId, _: [u8; 8]| {
        attested.push((v, p));
        true
    };
    pair(&mut a, &mut b, Variant::Original, &mut oracle, 2);
    assert!(a.trusts(c.id(), 2));
    assert!(!attested.contains(&(a.id(), c.id())));
    // and B's view reached A with B's policy for C
    let entry = a.store().get(c.id()).next().unwrap();
    assert_eq!(entry.policy.attested_at, 1);
}

#[test]
fn heterogeneous_bridge() {
    let (p, q) = (10, 20);
    let (mut a, mut b, mut c) = (node(1, &[p]), node(2, &[p, q]), node(3, &[q]));

    let direct = pair(&mut a, &mut c, Variant::Original, &mut AlwaysSucceed, 1);
    assert!(matches!(
        direct.outcome,
        Outcome::Terminated(Error::IncompatibleProtocols { .. })
    ));
    assert_eq!(direct.attestations_attempted, 0);
    assert!(a.store().is_empty() && c.store().is_empty());

    let bc = pair(&mut b, &mut c, Variant::Original, &mut AlwaysSucceed, 2);
    assert!(bc.directions.iter().all(|d| d.protocol == Some(q)));
    let ab = pair(&mut a, &mut b, Variant::Original, &mut AlwaysSucceed, 3);
    assert!(ab.directions.iter().all(|d| d.protocol == Some(p)));
    assert!(a.trusts(c.id(), 3));
    // C learns A the same way the next time it meets B
    pair(&mut b, &mut c, Variant::Original, &mut AlwaysSucceed, 4);
    assert!(c.trusts(a.id(), 4));

    let again = pair(&mut a, &mut c, Variant::Original, &mut AlwaysSucceed, 5);
    assert!(again.completed());
    assert_eq!(again.attestations_attempted, 0);
}

#[test]
fn offline_bridge() {
    let (mut a, mut b, mut c) = (node(1, &[1]), node(2, &[1]), node(3, &[1]));
    pair(&mut b, &mut c, Variant::Original, &mut AlwaysSucceed, 1);
    let c_id = c.id();
    // from now on C cannot be attested by anyone
    let mut c_down = |prover: NodeId, _: NodeId, _: ProtocolId, _: [u8; 8]| prover != c_id;

    let direct = pair(&mut a, &mut c, Variant::Original, &mut c_down, 2);
    assert!(matches!(
        direct.outcome,
        Outcome::Terminated(Error::AttestationFailed { .. })
    ));
    assert!(!a.trusts(c_id, 2));

    pair(&mut a, &mut b, Variant::Original, &mut c_down, 3);
    assert!(a.trusts(c_id, 3));
}

#[test]
fn failed_attestation_changes_nothing_and_stops_the_flow() {
    let (mut a, mut b, mut c) = (node(1, &[1]), node(2, &[1]), node(3, &[1]));
    pair(&mut b, &mut c, Variant::Original, &mut AlwaysSucceed, 1);
    let (before_a, before_b) = (a.store().clone(), b.store().clone());
    let mut never = RateOracle { key: 0, asr: 0.0 };
    let r = pair(&mut a, &mut b, Variant::Original, &mut never, 2);
    assert_eq!(r.attestations_attempted, 1);
    assert_eq!(r.directions.len(), 1);
    assert_eq!(r.sync_exchanges, 0);
    assert_eq!(a.store(), &before_a);
    assert_eq!(b.store(), &before_b);
}

#[test]
fn failure_in_second_direction_keeps_first() {
    let (mut a, mut b) = (node(1, &[1]), node(2, &[1]));
    // B (second verifier) fails to attest A
    let a_id = a.id();
    let mut oracle = |prover: NodeId, _: NodeId, _: ProtocolId, _: [u8; 8]| prover != a_id;
    let r = pair(&mut a, &mut b, Variant::Original, &mut oracle, 1);
    assert_eq!(r.directions.len(), 2);
    assert_eq!(r.attestations_attempted, 2);
    assert_eq!(r.attestations_succeeded, 1);
    assert!(a.trusts(b.id(), 1));
    assert!(!b.trusts(a_id, 1));
}

#[test]
fn expired_trust_triggers_reattestation() {
    let (mut a, mut b) = (node(1, &[1]), node(2, &[1]));
    let config = ProtocolConfig {
        policy_ttl: Some(10),
        ..Default::default()
    };
    let run = |a: &mut NodeState, b: &mut NodeState, now| {
        let mut o = AlwaysSucceed;
        let mut env = InteractionEnv::new(&config, &mut o, now);
        run_pairwise(a, b, &mut env).unwrap()
    };
    assert_eq!(run(&mut a, &mut b, 1).attestations_attempted, 2);
    assert_eq!(run(&mut a, &mut b, 11).attestations_attempted, 0);
    assert_eq!(run(&mut a, &mut b, 12).attestations_attempted, 2);
    assert_eq!(a.store().get(b.id()).next().unwrap().policy.attested_at, 12);
    assert_eq!(a.store().len(), 1);
}

#[test]
fn permissioned_gate_refuses_unknown_issuer() {
    let ca = Issuer::from_seed([1; 32]);
    let rogue = Issuer::from_seed([2; 32]);
    let gate = IssuerSet::new([ca.public()]);
    let mut a = node(1, &[1]).with_certificate(ca.issue(NodeId::from(1)));
    let mut b = node(2, &[1]).with_certificate(ca.issue(NodeId::from(2)));
    let mut m = node(3, &[1]).with_certificate(rogue.issue(NodeId::from(3)));
    let config = ProtocolConfig::default();
    let mut oracle = AlwaysSucceed;

    let mut env = InteractionEnv::new(&config, &mut oracle, 1);
    env.gate = Some(&gate);
    let ok = run_pairwise(&mut a, &mut b, &mut env).unwrap();
    assert!(ok.completed());
    // Hello now also carries the 104-byte certificate
    assert_eq!(ok.traffic.hello, 2 * (74 + 104));

    let refused = run_pairwise(&mut a, &mut m, &mut env).unwrap();
    assert!(matches!(
        refused.outcome,
        Outcome::Terminated(Error::ConnectRefused { .. })
    ));
    assert_eq!(refused.attestations_attempted, 0);
    assert!(!a.trusts(m.id(), 1));
}

struct ExtWorld {
    pkg: Pkg,
    ca: Issuer,
    bundles: BundleTable,
    epochs: EpochConfig,
}

impl ExtWorld {
    fn new() -> Self {
        let ca = Issuer::from_seed([5; 32]);
        let epochs = EpochConfig::default();
        ExtWorld {
            pkg: Pkg::init([6; 32], IssuerSet::new([ca.public()]), epochs),
            ca,
            bundles: BundleTable::default(),
            epochs,
        }
    }

    fn node(&self, id: u64, now: u64) -> NodeState {
        let nid = NodeId::from(id);
        let cert = self.ca.issue(nid);
        let mut n = node(id, &[1]).with_certificate(cert.clone());
        n.epoch_key = self
            .pkg
            .get_key(nid, self.epochs.epoch_of(now), &cert, now)
            .ok();
        n
    }

    fn run(
        &mut self,
        a: &mut NodeState,
        b: &mut NodeState,
        now: u64,
    ) -> trust_gossip::protocol::InteractionReport {
        let config = ProtocolConfig::default();
        let mut oracle = AlwaysSucceed;
        let mut env = InteractionEnv::new(&config, &mut oracle, now);
        env.extension = Some(ExtensionEnv {
            master: self.pkg.master_public(),
            epochs: self.epochs,
            bundles: &mut self.bundles,
            reject_stale_epochs: false,
        });
        run_pairwise(a, b, &mut env).unwrap()
    }
}

#[test]
fn extension_signs_and_propagates() {
    let mut w = ExtWorld::new();
    let (mut a, mut b, mut c) = (w.node(1, 1), w.node(2, 1), w.node(3, 1));
    let bc = w.run(&mut b, &mut c, 1);
    assert!(bc.completed());
    // policy offer (40) + signature reference (64) per direction
    assert_eq!(bc.traffic.extension, 2 * 104);
    assert!(b.store().entries().iter().all(|e| !e.signature.is_zero()));
    w.run(&mut a, &mut b, 2);
    assert!(a.trusts(c.id(), 2));
}

#[test]
fn extension_rejects_prover_without_key() {
    let mut w = ExtWorld::new();
    let mut a = w.node(1, 1);
    let mut d = w.node(4, 1);
    d.epoch_key = None;
    let r = w.run(&mut a, &mut d, 1);
    assert!(matches!(
        r.outcome,
        Outcome::Terminated(Error::AttestationFailed { .. })
    ));
    assert!(!a.trusts(d.id(), 1));
}

#[test]
fn denied_node_cannot_join_after_its_epoch() {
    let mut w = ExtWorld::new();
    let mut a = w.node(1, 1);
    let x_id = NodeId::from(7);
    let mut x = w.node(7, 1);
    w.pkg.deny(x_id);
    // key from before the denial still works within epoch 0
    assert!(w.run(&mut a, &mut x, 5).completed());
    // next epoch: no key can be obtained
    let cert = w.ca.issue(x_id);
    assert_eq!(
        w.pkg.get_key(x_id, 1, &cert, 1000).unwrap_err(),
        Error::Revoked(x_id)
    );
    let mut fresh_a = w.node(11, 1000);
    x.epoch_key = None;
    let r = w.run(&mut fresh_a, &mut x, 1000);
    assert!(!r.completed());
    assert!(!fresh_a.trusts(x_id, 1000));
}

/// Random schedules over a small network: Original never attests more than
/// Naive on the same schedule and coins.
fn attestations_over(
    variant: Variant,
    n: usize,
    schedule: &[(usize, usize)],
    asr: f64,
) -> (u32, Vec<usize>) {
    let mut nodes: Vec<_> = (0..n).map(|i| node(1000 + i as u64, &[1])).collect();
    let config = ProtocolConfig::with_variant(variant);
    let mut oracle = RateOracle { key: 17, asr };
    let mut total = 0;
    for (step, &(u, v)) in schedule.iter().enumerate() {
        let (lo, hi) = (u.min(v), u.max(v));
        let (left, right) = nodes.split_at_mut(hi);
        let mut env = InteractionEnv::new(&config, &mut oracle, step as u64 + 1);
        env.nonce_seed = step as u64;
        total += run_pairwise(&mut left[lo], &mut right[0], &mut env)
            .unwrap()
            .attestations_attempted;
    }
    let now = schedule.len() as u64;
    (
        total,
        nodes
            .iter()
            .map(|n| n.store().distinct_valid_subjects(now))
            .collect(),
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn gossip_never_attests_more_than_naive(
        seed in any::<u64>(),
        n in 3usize..12,
        len in 1usize..120,
        asr in prop_oneof![Just(1.0), 0.2f64..1.0],
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let schedule: Vec<_> = (0..len)
            .map(|_| {
                let u = rng.gen_range(0..n);
                let v = (u + rng.gen_range(1..n)) % n;
                (u, v)
            })
            .collect();
        let (orig, orig_trust) = attestations_over(Variant::Original, n, &schedule, asr);
        let (naive, naive_trust) = attestations_over(Variant::Naive, n, &schedule, asr);
        let (nobloom, nobloom_trust) = attestations_over(Variant::NoBloom, n, &schedule, asr);
        prop_assert!(orig <= naive);
        prop_assert!(nobloom <= naive);
        for i in 0..n {
            prop_assert!(orig_trust[i] >= naive_trust[i]);
            prop_assert!(nobloom_trust[i] >= orig_trust[i]);
        }
    }
}

/// Repeatedly covering every edge of a connected graph drives every store to
/// all n - 1 peers.
#[test]
fn repeated_coverage_converges() {
    let n = 30;
    let mut nodes: Vec<_> = (0..n).map(|i| node(500 + i as u64, &[1])).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let graph = trust_gossip::topology::watts_strogatz(n, 4, 0.1, &mut rng).unwrap();
    assert!(graph.is_connected());
    let config = ProtocolConfig::default();
    let mut oracle = AlwaysSucceed;
    let mut now = 0;
    for _ in 0..20 {
        for &(u, v) in graph.edges() {
            now += 1;
            let (left, right) = nodes.split_at_mut(v as usize);
            let mut env = InteractionEnv::new(&config, &mut oracle, now);
            run_pairwise(&mut left[u as usize], &mut right[0], &mut env).unwrap();
        }
    }
    for nd in &nodes {
        assert_eq!(
            nd.store().distinct_valid_subjects(now),
            n - 1,
            "{}",
            nd.id()
        );
    }
}
