use crate::entry::{EntryDigest, Timestamp};
use crate::error::{Error, Result};
use crate::murmur3::murmur3_32;
use crate::store::TrustStore;

pub const DEFAULT_BITS: usize = 512;
pub const DEFAULT_HASHES: u32 = 3;

/// Fixed-size Bloom filter over entry digests.
///
/// Position `s` of a digest is `murmur3_32(digest, seed = s) mod m` for
/// `s in 0..k`. Bit `i` lives in byte `i / 8` at bit `i % 8` (LSB first), which
/// is also the wire layout.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BloomFilter {
    bits: Vec<u8>,
    m: usize,
    k: u32,
    count: u64,
}

impl Default for BloomFilter {
    fn default() -> Self {
        BloomFilter::new(DEFAULT_BITS, DEFAULT_HASHES).expect("default parameters are valid")
    }
}

impl BloomFilter {
    pub fn new(m_bits: usize, k: u32) -> Result<Self> {
        if m_bits < 8 {
            return Err(Error::InvalidInput(format!(
                "bloom filter needs at least 8 bits, got {m_bits}"
            )));
        }
        if k == 0 {
            return Err(Error::InvalidInput("bloom filter needs k >= 1".into()));
        }
        Ok(BloomFilter {
            bits: vec![0; m_bits.div_ceil(8)],
            m: m_bits,
            k,
            count: 0,
        })
    }

    /// Default-parameter filter holding every entry of `store` valid at `now`.
    pub fn from_store(store: &TrustStore, now: Timestamp) -> Self {
        let mut f = BloomFilter::default();
        for e in store.entries() {
            if e.policy.is_valid_at(now) {
                f.insert(&e.digest());
            }
        }
        f
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    /// Insertions performed, duplicates included.
    pub fn count(&self) -> u64 {
        self.count
    }

    #[inline]
    fn position(&self, digest: &EntryDigest, seed: u32) -> usize {
        (murmur3_32(&digest.0, seed) as u64 % self.m as u64) as usize
    }

    pub fn insert(&mut self, digest: &EntryDigest) {
        for seed in 0..self.k {
            let pos = self.position(digest, seed);
            self.bits[pos / 8] |= 1 << (pos % 8);
        }
        self.count += 1;
    }

    pub fn contains(&self, digest: &EntryDigest) -> bool {
        (0..self.k).all(|seed| {
            let pos = self.position(digest, seed);
            self.bits[pos / 8] & (1 << (pos % 8)) != 0
        })
    }

    pub fn popcount(&self) -> u32 {
        self.bits.iter().map(|b| b.count_ones()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.iter().all(|&b| b == 0)
    }

    /// Raw bit array, `ceil(m / 8)` bytes.
    pub fn as_bytes(&self) -> &[u8] {
        &self.bits
    }

    pub fn byte_len(&self) -> usize {
        self.bits.len()
    }

    /// Rebuilds a filter from its wire bytes. The insertion count is not
    /// carried on the wire and comes back as zero.
    pub fn from_bytes(m_bits: usize, k: u32, bytes: &[u8]) -> Result<Self> {
        let mut f = BloomFilter::new(m_bits, k)?;
        if bytes.len() != f.bits.len() {
            return Err(Error::Decode(format!(
                "bloom filter of {m_bits} bits needs {} bytes, got {}",
                f.bits.len(),
                bytes.len()
            )));
        }
        f.bits.copy_from_slice(bytes);
        let spare = f.bits.len() * 8 - m_bits;
        if spare > 0 && f.bits[f.bits.len() - 1] >> (8 - spare) != 0 {
            return Err(Error::Decode("bits set beyond m".into()));
        }
        Ok(f)
    }
}

/// Expected false-positive probability `(1 - e^(-k n / m))^k`.
pub fn fp_estimate(m: usize, k: u32, n: u64) -> Result<f64> {
    if m == 0 || k == 0 {
        return Err(Error::InvalidInput(format!(
            "false-positive estimate needs m >= 1 and k >= 1, got m={m} k={k}"
        )));
    }
    let k = k as f64;
    Ok((1.0 - (-k * n as f64 / m as f64).exp()).powf(k))
}
