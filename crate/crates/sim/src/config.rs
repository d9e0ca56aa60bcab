use std::fmt;

use rand::Rng;
use trust_gossip::protocol::{AttestationProtocolSet, Variant};
use trust_gossip::topology::{self, Graph};
use trust_gossip::ProtocolId;

use crate::error::{SimError, SimResult};

/// Resampling budget for `ErdosRenyi { connected: true }`.
const MAX_CONNECTED_RESAMPLES: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TopologySpec {
    /// `connected` resamples until the graph is connected.
    ErdosRenyi {
        p: f64,
        connected: bool,
    },
    WattsStrogatz {
        k: usize,
        p: f64,
    },
    BarabasiAlbert {
        m: usize,
    },
    Complete,
}

impl TopologySpec {
    pub const ER_DEFAULT: TopologySpec = TopologySpec::ErdosRenyi {
        p: 0.05,
        connected: false,
    };
    pub const WS_DEFAULT: TopologySpec = TopologySpec::WattsStrogatz { k: 4, p: 0.1 };
    pub const BA_DEFAULT: TopologySpec = TopologySpec::BarabasiAlbert { m: 2 };

    pub fn short_name(&self) -> &'static str {
        match self {
            TopologySpec::ErdosRenyi { .. } => "er",
            TopologySpec::WattsStrogatz { .. } => "ws",
            TopologySpec::BarabasiAlbert { .. } => "ba",
            TopologySpec::Complete => "complete",
        }
    }

    pub fn validate(&self, n: usize) -> SimResult<()> {
        let bad = |msg: String| Err(SimError::Config(msg));
        match *self {
            TopologySpec::ErdosRenyi { p, .. } if !(0.0..=1.0).contains(&p) => {
                bad(format!("ER edge probability {p} not in [0, 1]"))
            }
            TopologySpec::WattsStrogatz { k, p } => {
                if k < 2 || !k.is_multiple_of(2) {
                    bad(format!("WS k must be even and >= 2, got {k}"))
                } else if k >= n {
                    bad(format!("WS needs n > k, got n={n} k={k}"))
                } else if !(0.0..=1.0).contains(&p) {
                    bad(format!("WS rewiring probability {p} not in [0, 1]"))
                } else {
                    Ok(())
                }
            }
            TopologySpec::BarabasiAlbert { m } if m < 1 || n <= m => {
                bad(format!("BA needs n > m >= 1, got n={n} m={m}"))
            }
            _ => Ok(()),
        }
    }

    pub fn build<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> SimResult<Graph> {
        let g = match *self {
            TopologySpec::ErdosRenyi { p, connected } => {
                let mut g = topology::erdos_renyi(n, p, rng)?;
                let mut tries = 1;
                while connected && !g.is_connected() {
                    if tries == MAX_CONNECTED_RESAMPLES {
                        return Err(SimError::Config(format!(
                            "no connected ER graph with n={n} p={p} after {tries} samples"
                        )));
                    }
                    g = topology::erdos_renyi(n, p, rng)?;
                    tries += 1;
                }
                g
            }
            TopologySpec::WattsStrogatz { k, p } => topology::watts_strogatz(n, k, p, rng)?,
            TopologySpec::BarabasiAlbert { m } => topology::barabasi_albert(n, m, rng)?,
            TopologySpec::Complete => topology::complete(n)?,
        };
        Ok(g)
    }
}

impl fmt::Display for TopologySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TopologySpec::ErdosRenyi { p, connected } => {
                write!(f, "er(p={p}{})", if *connected { ",connected" } else { "" })
            }
            TopologySpec::WattsStrogatz { k, p } => write!(f, "ws(k={k},p={p})"),
            TopologySpec::BarabasiAlbert { m } => write!(f, "ba(m={m})"),
            TopologySpec::Complete => write!(f, "complete"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ProtocolAssignment {
    Uniform(AttestationProtocolSet),
    /// Nodes split into thirds supporting `{p}`, `{p, q}` and `{q}`.
    Heterogeneous {
        p: ProtocolId,
        q: ProtocolId,
    },
}

impl Default for ProtocolAssignment {
    fn default() -> Self {
        ProtocolAssignment::Uniform(AttestationProtocolSet::single(1))
    }
}

impl ProtocolAssignment {
    pub fn for_node(&self, index: usize, n: usize) -> AttestationProtocolSet {
        match self {
            ProtocolAssignment::Uniform(set) => set.clone(),
            ProtocolAssignment::Heterogeneous { p, q } => match 3 * index / n {
                0 => AttestationProtocolSet::single(*p),
                1 => AttestationProtocolSet::new([*p, *q]).expect("non-empty"),
                _ => AttestationProtocolSet::single(*q),
            },
        }
    }
}

impl fmt::Display for ProtocolAssignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProtocolAssignment::Uniform(set) => {
                let ids: Vec<String> = set.iter().map(|p| p.to_string()).collect();
                write!(f, "uniform({})", ids.join("+"))
            }
            ProtocolAssignment::Heterogeneous { p, q } => write!(f, "heterogeneous({p},{q})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub variant: Variant,
    pub topology: TopologySpec,
    pub n: usize,
    pub rounds: u64,
    pub interactions_per_round: usize,
    pub asr: f64,
    pub trials: usize,
    pub seed: u64,
    pub permissioned: bool,
    pub extension_enabled: bool,
    /// Policies expire this many rounds after attestation.
    pub expiry_rounds: Option<u64>,
    pub protocol_assignment: ProtocolAssignment,
    /// Rounds per key epoch when the extension is on.
    pub epoch_rounds: u64,
    pub reject_stale_epochs: bool,
    pub key_agreement_bytes: usize,
    pub attest_message_bytes: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            variant: Variant::Original,
            topology: TopologySpec::Complete,
            n: 50,
            rounds: 500,
            interactions_per_round: 100,
            asr: 1.0,
            trials: 5,
            seed: 0,
            permissioned: false,
            extension_enabled: false,
            expiry_rounds: None,
            protocol_assignment: ProtocolAssignment::default(),
            epoch_rounds: 100,
            reject_stale_epochs: false,
            key_agreement_bytes: 0,
            attest_message_bytes: 0,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> SimResult<()> {
        let bad = |msg: &str| Err(SimError::Config(msg.to_string()));
        if self.n < 2 {
            return bad("n must be at least 2");
        }
        if self.rounds < 1 {
            return bad("rounds must be at least 1");
        }
        if self.interactions_per_round < 1 {
            return bad("interactions per round must be at least 1");
        }
        if !(0.0..=1.0).contains(&self.asr) {
            return bad("asr must lie in [0, 1]");
        }
        if self.trials < 1 {
            return bad("trials must be at least 1");
        }
        if self.expiry_rounds == Some(0) {
            return bad("expiry rounds must be at least 1");
        }
        if self.epoch_rounds < 1 {
            return bad("epoch rounds must be at least 1");
        }
        if let ProtocolAssignment::Heterogeneous { p, q } = self.protocol_assignment {
            if p == q {
                return bad("heterogeneous assignment needs two distinct protocols");
            }
        }
        self.topology.validate(self.n)
    }

    /// `key=value` lines echoing every setting.
    pub fn echo(&self) -> String {
        let expiry = self
            .expiry_rounds
            .map_or_else(|| "none".to_string(), |r| r.to_string());
        let lines = [
            ("variant", self.variant.as_str().to_string()),
            ("topology", self.topology.to_string()),
            ("n", self.n.to_string()),
            ("rounds", self.rounds.to_string()),
            (
                "interactions_per_round",
                self.interactions_per_round.to_string(),
            ),
            ("asr", self.asr.to_string()),
            ("trials", self.trials.to_string()),
            ("seed", self.seed.to_string()),
            ("permissioned", self.permissioned.to_string()),
            ("extension", self.extension_enabled.to_string()),
            ("expiry_rounds", expiry),
            ("protocols", self.protocol_assignment.to_string()),
            ("epoch_rounds", self.epoch_rounds.to_string()),
            ("reject_stale_epochs", self.reject_stale_epochs.to_string()),
            ("key_agreement_bytes", self.key_agreement_bytes.to_string()),
            (
                "attest_message_bytes",
                self.attest_message_bytes.to_string(),
            ),
        ];
        lines.iter().map(|(k, v)| format!("{k}={v}\n")).collect()
    }
}
