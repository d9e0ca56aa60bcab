use crate::bloom::BloomFilter;
use crate::cert::IssuerSet;
use crate::entry::Timestamp;
use crate::error::{Error, Result};
use crate::ids::NodeId;
use crate::store::TrustStore;

use super::message::{AttestationProtocolSet, Message};
use super::node::NodeState;
use super::Variant;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    AwaitHello,
    Verifying,
    Attesting,
    Syncing,
    Done,
    Failed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RolesCompleted {
    pub self_verified_peer: bool,
    pub peer_verified_self: bool,
}

/// One node's view of a pairwise run.
#[derive(Debug, Clone)]
pub struct Session {
    pub local: NodeId,
    pub peer: NodeId,
    pub phase: Phase,
    /// Snapshot taken from the peer's Hello; never updated afterwards.
    pub peer_filter: BloomFilter,
    pub peer_protocols: AttestationProtocolSet,
    pub roles: RolesCompleted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NextAction {
    StartSync,
    StartAttest,
    /// Naive variant with the peer already trusted: nothing to do this direction.
    Complete,
}

impl Session {
    fn from_hello(local: NodeId, hello: &Message) -> Self {
        let Message::Hello {
            sender,
            filter,
            protocols,
            ..
        } = hello
        else {
            unreachable!("connect only builds sessions from Hello messages")
        };
        Session {
            local,
            peer: *sender,
            phase: Phase::Verifying,
            peer_filter: filter.clone(),
            peer_protocols: protocols.clone(),
            roles: RolesCompleted::default(),
        }
    }

    pub fn is_terminal(&self) -> bool {
        matches!(self.phase, Phase::Done | Phase::Failed)
    }

    pub fn fail(&mut self) {
        self.phase = Phase::Failed;
    }

    /// Records that one direction finished and moves to the next phase.
    pub fn finish_direction(&mut self, local_was_verifier: bool) {
        if self.phase == Phase::Failed {
            return;
        }
        if local_was_verifier {
            self.roles.self_verified_peer = true;
        } else {
            self.roles.peer_verified_self = true;
        }
        self.phase = if self.roles.self_verified_peer && self.roles.peer_verified_self {
            Phase::Done
        } else {
            Phase::Verifying
        };
    }
}

pub struct Connected {
    pub a: Session,
    pub b: Session,
    /// Hello sent by `a` and by `b`, in that order.
    pub hellos: [Message; 2],
}

fn hello(node: &mut NodeState, now: Timestamp, variant: Variant) -> Message {
    // Only the filtered variant ever queries the peer filter.
    let filter = match variant {
        Variant::Original => node.advertised_filter(now),
        Variant::NoBloom | Variant::Naive => BloomFilter::default(),
    };
    Message::Hello {
        sender: node.id(),
        filter,
        protocols: node.protocols.clone(),
        certificate: node.certificate.clone(),
    }
}

fn admit(gate: &IssuerSet, receiver: NodeId, hello: &Message) -> Result<()> {
    let Message::Hello {
        sender,
        certificate,
        ..
    } = hello
    else {
        unreachable!()
    };
    match certificate {
        Some(cert) if gate.admits(cert, *sender) => Ok(()),
        Some(_) => Err(Error::ConnectRefused {
            by: receiver,
            reason: format!("certificate of {sender} not from an allowed issuer"),
        }),
        None => Err(Error::ConnectRefused {
            by: receiver,
            reason: format!("{sender} presented no certificate"),
        }),
    }
}

/// Exchanges Hello messages. In a permissioned network (`gate` set) each side
/// checks the peer's certificate before accepting the session.
pub fn connect(
    a: &mut NodeState,
    b: &mut NodeState,
    now: Timestamp,
    variant: Variant,
    gate: Option<&IssuerSet>,
) -> Result<Connected> {
    if a.id() == b.id() {
        return Err(Error::InvalidInput(format!(
            "node {} cannot connect to itself",
            a.id()
        )));
    }
    let hello_a = hello(a, now, variant);
    let hello_b = hello(b, now, variant);
    if let Some(gate) = gate {
        admit(gate, b.id(), &hello_a)?;
        admit(gate, a.id(), &hello_b)?;
    }
    Ok(Connected {
        a: Session::from_hello(a.id(), &hello_b),
        b: Session::from_hello(b.id(), &hello_a),
        hellos: [hello_a, hello_b],
    })
}

/// Verifier-side decision: sync if the peer is already trusted, else attest.
pub fn verify(
    session: &mut Session,
    store: &TrustStore,
    now: Timestamp,
    variant: Variant,
) -> Result<NextAction> {
    if session.phase != Phase::Verifying {
        return Err(Error::InvalidInput(format!(
            "verify called in phase {:?}",
            session.phase
        )));
    }
    let action = if !store.contains(session.peer, now) {
        session.phase = Phase::Attesting;
        NextAction::StartAttest
    } else if variant == Variant::Naive {
        NextAction::Complete
    } else {
        session.phase = Phase::Syncing;
        NextAction::StartSync
    };
    Ok(action)
}
