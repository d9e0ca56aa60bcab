use std::time::Instant;

use rand::Rng;
use trust_gossip::cert::{Issuer, IssuerSet};
use trust_gossip::extension::{BundleTable, EpochConfig, Pkg};
use trust_gossip::protocol::{
    run_pairwise, splitmix64, ExtensionEnv, InteractionEnv, NodeState, ProtocolConfig, RateOracle,
    WireCosts,
};
use trust_gossip::topology::Graph;
use trust_gossip::{derive_node_id, NodeId};

use crate::config::SimConfig;
use crate::error::{SimError, SimResult};
use crate::streams::{self, Stream};

/// Headline per-round record; the CSV columns.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoundMetrics {
    pub round: u64,
    /// Mean number of distinct unexpired subjects per store.
    pub avg_trust: f64,
    /// `avg_trust / (n - 1)`.
    pub avg_trust_pct: f64,
    pub bytes_sync: u64,
    pub bytes_total: u64,
    pub attest_attempted: u64,
    pub attest_succeeded: u64,
    pub wallclock_s: f64,
}

/// Per-round breakdown written next to the headline metrics.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RoundDetail {
    pub round: u64,
    pub bytes_hello: u64,
    pub bytes_attest: u64,
    pub bytes_extension: u64,
    pub bundle_overhead: u64,
    pub sync_bytes_per_interaction: f64,
    pub entries_sent: u64,
    pub entries_rejected: u64,
    pub interactions_completed: u64,
    pub interactions_terminated: u64,
}

#[derive(Debug, Clone)]
pub struct TrialOutput {
    pub seed: u64,
    pub graph: Graph,
    pub metrics: Vec<RoundMetrics>,
    pub details: Vec<RoundDetail>,
}

/// Draws `count` edges uniformly with replacement.
pub fn sample_interactions<R: Rng + ?Sized>(
    graph: &Graph,
    count: usize,
    rng: &mut R,
) -> SimResult<Vec<(u32, u32)>> {
    let edges = graph.edges();
    if edges.is_empty() {
        return Err(SimError::DegenerateGraph);
    }
    Ok((0..count)
        .map(|_| edges[rng.gen_range(0..edges.len())])
        .collect())
}

pub(crate) fn pair_mut<T>(items: &mut [T], i: usize, j: usize) -> (&mut T, &mut T) {
    assert_ne!(i, j);
    if i < j {
        let (lo, hi) = items.split_at_mut(j);
        (&mut lo[i], &mut hi[0])
    } else {
        let (lo, hi) = items.split_at_mut(i);
        (&mut hi[0], &mut lo[j])
    }
}

/// Distinct node IDs from the trial's key stream.
pub fn node_ids(n: usize, trial_seed: u64) -> SimResult<Vec<NodeId>> {
    let mut rng = streams::rng(trial_seed, Stream::NodeKeys);
    let prf_key: [u8; 32] = rng.gen();
    let mut ids = Vec::with_capacity(n);
    let mut seen = std::collections::HashSet::with_capacity(n);
    for _ in 0..n {
        let pk: [u8; 32] = rng.gen();
        let id = derive_node_id(&pk, &prf_key)?;
        if !seen.insert(id) {
            return Err(SimError::Config(format!("node id collision on {id}")));
        }
        ids.push(id);
    }
    Ok(ids)
}

struct Authority {
    pkg: Pkg,
    bundles: BundleTable,
    epochs: EpochConfig,
}

/// Refreshes every node's signing key when the epoch changes.
fn rotate_keys(nodes: &mut [NodeState], authority: &Authority, now: u64) {
    let epoch = authority.epochs.epoch_of(now);
    for node in nodes {
        let current = node.epoch_key.as_ref().map(|k| k.identity().epoch);
        if current == Some(epoch) {
            continue;
        }
        node.epoch_key = node
            .certificate
            .as_ref()
            .and_then(|cert| authority.pkg.get_key(node.id(), epoch, cert, now).ok());
    }
}

pub fn run_trial(config: &SimConfig, trial_seed: u64) -> SimResult<TrialOutput> {
    config.validate()?;
    let n = config.n;
    let graph = config
        .topology
        .build(n, &mut streams::rng(trial_seed, Stream::Topology))?;
    if graph.edge_count() == 0 {
        return Err(SimError::DegenerateGraph);
    }
    let mut schedule_rng = streams::rng(trial_seed, Stream::Schedule);
    let mut oracle = RateOracle {
        key: streams::rng(trial_seed, Stream::Attestation).gen(),
        asr: config.asr,
    };

    let ids = node_ids(n, trial_seed)?;
    let mut nodes: Vec<NodeState> = ids
        .iter()
        .enumerate()
        .map(|(i, &id)| NodeState::new(id, config.protocol_assignment.for_node(i, n)))
        .collect();

    let needs_certs = config.permissioned || config.extension_enabled;
    let mut authority_rng = streams::rng(trial_seed, Stream::Authority);
    let issuer = Issuer::from_seed(authority_rng.gen());
    let issuers = IssuerSet::new([issuer.public()]);
    if needs_certs {
        for node in &mut nodes {
            node.certificate = Some(issuer.issue(node.id()));
        }
    }
    let mut authority = config.extension_enabled.then(|| {
        let epochs = EpochConfig {
            epoch_length: config.epoch_rounds,
            prefetch_window: 1,
        };
        Authority {
            pkg: Pkg::init(authority_rng.gen(), issuers.clone(), epochs),
            bundles: BundleTable::default(),
            epochs,
        }
    });

    let protocol = ProtocolConfig {
        variant: config.variant,
        policy_ttl: config.expiry_rounds,
        wire: WireCosts {
            attest_message_bytes: config.attest_message_bytes,
        },
        key_agreement_bytes: config.key_agreement_bytes,
        ..ProtocolConfig::default()
    };
    let gate = config.permissioned.then_some(&issuers);

    let rounds = config.rounds as usize;
    let mut metrics = Vec::with_capacity(rounds);
    let mut details = Vec::with_capacity(rounds);
    for round in 1..=config.rounds {
        let now = round;
        let pairs = sample_interactions(&graph, config.interactions_per_round, &mut schedule_rng)?;
        if let Some(auth) = authority.as_ref() {
            rotate_keys(&mut nodes, auth, now);
        }

        let mut m = RoundMetrics {
            round,
            avg_trust: 0.0,
            avg_trust_pct: 0.0,
            bytes_sync: 0,
            bytes_total: 0,
            attest_attempted: 0,
            attest_succeeded: 0,
            wallclock_s: 0.0,
        };
        let mut d = RoundDetail {
            round,
            ..Default::default()
        };

        let started = Instant::now();
        for (index, &(u, v)) in pairs.iter().enumerate() {
            let (a, b) = pair_mut(&mut nodes, u as usize, v as usize);
            let mut env = InteractionEnv::new(&protocol, &mut oracle, now);
            env.gate = gate;
            env.nonce_seed = splitmix64(round << 32 | index as u64);
            if let Some(auth) = authority.as_mut() {
                env.extension = Some(ExtensionEnv {
                    master: auth.pkg.master_public(),
                    epochs: auth.epochs,
                    bundles: &mut auth.bundles,
                    reject_stale_epochs: config.reject_stale_epochs,
                });
            }
            let report = run_pairwise(a, b, &mut env)?;

            let t = &report.traffic;
            m.bytes_sync += t.sync;
            m.bytes_total += t.total();
            m.attest_attempted += u64::from(report.attestations_attempted);
            m.attest_succeeded += u64::from(report.attestations_succeeded);
            d.bytes_hello += t.hello;
            d.bytes_attest += t.attest;
            d.bytes_extension += t.extension;
            d.bundle_overhead += t.bundle_overhead;
            for dir in &report.directions {
                d.entries_sent += dir.entries_sent as u64;
                d.entries_rejected += dir.sync.map_or(0, |s| s.rejected as u64);
            }
            if report.completed() {
                d.interactions_completed += 1;
            } else {
                d.interactions_terminated += 1;
            }
        }
        m.wallclock_s = started.elapsed().as_secs_f64();

        if config.expiry_rounds.is_some() {
            for node in &mut nodes {
                node.expire(now);
            }
        }
        let trusted: usize = if config.expiry_rounds.is_some() {
            nodes
                .iter()
                .map(|x| x.store().distinct_valid_subjects(now))
                .sum()
        } else {
            nodes.iter().map(|x| x.store().distinct_subjects()).sum()
        };
        m.avg_trust = trusted as f64 / n as f64;
        m.avg_trust_pct = m.avg_trust / (n - 1) as f64;
        d.sync_bytes_per_interaction = m.bytes_sync as f64 / pairs.len() as f64;
        metrics.push(m);
        details.push(d);
    }

    Ok(TrialOutput {
        seed: trial_seed,
        graph,
        metrics,
        details,
    })
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use trust_gossip::protocol::Variant;
    use trust_gossip::topology;

    use super::*;
    use crate::config::TopologySpec;

    fn small(variant: Variant) -> SimConfig {
        SimConfig {
            variant,
            n: 20,
            rounds: 60,
            interactions_per_round: 20,
            trials: 1,
            ..SimConfig::default()
        }
    }

    fn strip_clock(out: &TrialOutput) -> Vec<RoundMetrics> {
        out.metrics
            .iter()
            .map(|m| RoundMetrics {
                wallclock_s: 0.0,
                ..*m
            })
            .collect()
    }

    #[test]
    fn sampling_basics() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let g = topology::complete(5).unwrap();
        assert_eq!(sample_interactions(&g, 100, &mut rng).unwrap().len(), 100);
        let one = Graph::from_edges(4, [(1, 3)]).unwrap();
        assert!(sample_interactions(&one, 50, &mut rng)
            .unwrap()
            .iter()
            .all(|&e| e == (1, 3)));
        let empty = Graph::from_edges(4, []).unwrap();
        assert!(matches!(
            sample_interactions(&empty, 1, &mut rng),
            Err(SimError::DegenerateGraph)
        ));
    }

    #[test]
    fn deterministic_per_seed() {
        let c = small(Variant::Original);
        let a = run_trial(&c, 3).unwrap();
        let b = run_trial(&c, 3).unwrap();
        assert_eq!(strip_clock(&a), strip_clock(&b));
        assert_eq!(a.details, b.details);
        let other = run_trial(&c, 4).unwrap();
        assert_ne!(strip_clock(&a), strip_clock(&other));
    }

    #[test]
    fn trust_is_monotone_and_bounded() {
        for v in Variant::ALL {
            let out = run_trial(&small(v), 9).unwrap();
            assert_eq!(out.metrics.len(), 60);
            for w in out.metrics.windows(2) {
                assert!(w[1].avg_trust >= w[0].avg_trust);
            }
            assert!(out
                .metrics
                .iter()
                .all(|m| (0.0..=1.0).contains(&m.avg_trust_pct)));
        }
    }

    #[test]
    fn naive_growth_bound() {
        let c = small(Variant::Naive);
        let out = run_trial(&c, 2).unwrap();
        for m in &out.metrics {
            let bound = 2.0 * c.interactions_per_round as f64 * m.round as f64 / c.n as f64;
            assert!(m.avg_trust <= bound + 1e-12);
            assert_eq!(m.bytes_sync, 0);
        }
    }

    #[test]
    fn degenerate_graph_aborts() {
        let c = SimConfig {
            topology: TopologySpec::ErdosRenyi {
                p: 0.0,
                connected: false,
            },
            ..small(Variant::Original)
        };
        assert!(matches!(run_trial(&c, 0), Err(SimError::DegenerateGraph)));
    }

    #[test]
    fn expiry_caps_trust() {
        let c = SimConfig {
            expiry_rounds: Some(5),
            ..small(Variant::Naive)
        };
        let out = run_trial(&c, 1).unwrap();
        // at most 2 attestations per interaction over the last 6 rounds survive
        let cap = 2.0 * 20.0 * 6.0 / 20.0;
        assert!(out.metrics.iter().all(|m| m.avg_trust <= cap));
    }

    #[test]
    fn extension_and_permissioned_runs_match_plain_trust() {
        let plain = run_trial(&small(Variant::Original), 5).unwrap();
        let gated = SimConfig {
            permissioned: true,
            extension_enabled: true,
            epoch_rounds: 25,
            ..small(Variant::Original)
        };
        let out = run_trial(&gated, 5).unwrap();
        let trust = |o: &TrialOutput| o.metrics.iter().map(|m| m.avg_trust).collect::<Vec<_>>();
        assert_eq!(trust(&plain), trust(&out));
        assert!(out.details.iter().any(|d| d.bytes_extension > 0));
        assert!(out.details.iter().all(|d| d.entries_rejected == 0));
    }
}
