use thiserror::Error;

use crate::ids::NodeId;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("decode error: {0}")]
    Decode(String),

    #[error("node {0} cannot hold an entry about itself")]
    SelfEntry(NodeId),

    #[error("connection refused by {by}: {reason}")]
    ConnectRefused { by: NodeId, reason: String },

    #[error("no common attestation protocol between {verifier} and {prover}")]
    IncompatibleProtocols { verifier: NodeId, prover: NodeId },

    #[error("attestation of {prover} by {verifier} did not establish trust")]
    AttestationFailed { verifier: NodeId, prover: NodeId },

    #[error("certificate rejected for {0}")]
    Unauthorised(NodeId),

    #[error("{0} is on the denylist")]
    Revoked(NodeId),

    #[error("epoch {requested} outside issuance window [{first}, {last}]")]
    EpochOutOfRange {
        requested: u64,
        first: u64,
        last: u64,
    },

    #[error("signing key for epoch {key_epoch} used at epoch {current}")]
    StaleKey { key_epoch: u64, current: u64 },
}

pub type Result<T> = std::result::Result<T, Error>;
