use std::fmt;

use hmac::{Hmac, Mac};
use sha2::Sha256;

use crate::error::{Error, Result};

pub const NODE_ID_LEN: usize = 8;

/// Opaque 8-byte node identifier.
///
/// Ordering is lexicographic on the raw bytes; the protocol engine uses it to
/// pick which side of a pair verifies first.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct NodeId(pub [u8; NODE_ID_LEN]);

impl NodeId {
    pub const fn from_bytes(bytes: [u8; NODE_ID_LEN]) -> Self {
        NodeId(bytes)
    }

    pub fn as_bytes(&self) -> &[u8; NODE_ID_LEN] {
        &self.0
    }

    pub fn to_u64(self) -> u64 {
        u64::from_be_bytes(self.0)
    }
}

impl From<u64> for NodeId {
    fn from(v: u64) -> Self {
        NodeId(v.to_be_bytes())
    }
}

impl fmt::Debug for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "NodeId({self})")
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.0 {
            write!(f, "{b:02x}")?;
        }
        Ok(())
    }
}

/// Derives a node ID as HMAC-SHA256(prf_key, public_key) truncated to 8 bytes.
pub fn derive_node_id(public_key: &[u8], prf_key: &[u8; 32]) -> Result<NodeId> {
    if public_key.is_empty() {
        return Err(Error::InvalidInput("public key is empty".into()));
    }
    let mut mac = Hmac::<Sha256>::new_from_slice(prf_key).expect("hmac accepts any key length");
    mac.update(public_key);
    let out = mac.finalize().into_bytes();
    let mut id = [0u8; NODE_ID_LEN];
    id.copy_from_slice(&out[..NODE_ID_LEN]);
    Ok(NodeId(id))
}
