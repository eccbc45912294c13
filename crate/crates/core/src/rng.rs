//! Reproducible random streams.
//!
//! Every consumer gets a ChaCha20 stream keyed by `(root seed, domain)` and
//! selected by an index (a prime, a repetition number), so parallel and serial
//! runs draw identical numbers.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

/// Stream family for the per-prime residue search.
pub const DOMAIN_CONSTRUCT: u64 = 0x636f_6e73_7472_7563;
/// Stream family for the `(p, shift)` draws of the randomised rule.
pub const DOMAIN_INTEGRATE: u64 = 0x696e_7465_6772_6174;

/// Identifies the stream a draw came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StreamId {
    pub root: u64,
    pub domain: u64,
    pub index: u64,
}

impl StreamId {
    pub fn new(root: u64, domain: u64, index: u64) -> Self {
        Self { root, domain, index }
    }

    pub fn rng(&self) -> ChaCha20Rng {
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&self.root.to_le_bytes());
        key[8..16].copy_from_slice(&self.domain.to_le_bytes());
        let mut rng = ChaCha20Rng::from_seed(key);
        rng.set_stream(self.index);
        rng
    }
}

pub fn stream(root: u64, domain: u64, index: u64) -> ChaCha20Rng {
    StreamId::new(root, domain, index).rng()
}
