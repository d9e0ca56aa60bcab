//! The pairwise protocol: Connect, Verify, Attest and Sync, run once per
//! direction with the roles switched in between.

mod engine;
mod message;
mod node;
mod oracle;
mod session;
mod sync;

pub use engine::{
    run_pairwise, DirectionPath, DirectionReport, ExtensionEnv, InteractionEnv, InteractionReport,
    Outcome, ProtocolConfig, TraceRecord, TraceSink, Traffic,
};
pub use message::{
    choose_protocol, AttestationProtocolSet, Message, MessageKind, TerminateReason, WireCosts,
};
pub use node::NodeState;
pub use oracle::{splitmix64, AlwaysSucceed, AttestationOracle, RateOracle};
pub use session::{connect, verify, Connected, NextAction, Phase, RolesCompleted, Session};
pub use sync::{sync_apply, sync_select, SyncApplied};

/// Strategy used by every node in a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    /// Bloom-filtered gossip.
    Original,
    /// Gossip of the full trusted list.
    NoBloom,
    /// Direct attestation only, no gossip.
    Naive,
}

impl Variant {
    pub const ALL: [Variant; 3] = [Variant::Original, Variant::NoBloom, Variant::Naive];

    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Original => "original",
            Variant::NoBloom => "no-bloom",
            Variant::Naive => "naive",
        }
    }
}

impl std::str::FromStr for Variant {
    type Err = crate::Error;

    fn from_str(s: &str) -> crate::Result<Self> {
        match s {
            "original" => Ok(Variant::Original),
            "no-bloom" => Ok(Variant::NoBloom),
            "naive" => Ok(Variant::Naive),
            other => Err(crate::Error::InvalidInput(format!(
                "unknown variant {other:?}"
            ))),
        }
    }
}
