//! Stable seed derivation from labelled tuples.

use std::hash::Hasher;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// FNV-1a over `label` and the little-endian bytes of `parts`.
pub fn derive(label: &str, parts: &[u64]) -> u64 {
    let mut h = fnv::FnvHasher::default();
    h.write(label.as_bytes());
    for p in parts {
        h.write(&p.to_le_bytes());
    }
    h.finish()
}

pub fn rng(label: &str, parts: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive(label, parts))
}
