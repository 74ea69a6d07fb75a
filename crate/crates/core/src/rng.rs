//! Seed streams.
//!
//! Every component draws from its own ChaCha stream derived from the master
//! seed and a label, so the order in which components (or parallel trials)
//! run never changes what they see.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

fn fnv1a(bytes: &[u8], mut hash: u64) -> u64 {
    for b in bytes {
        hash ^= u64::from(*b);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;

/// Generator for the component named `label` under `seed`.
pub fn stream(seed: u64, label: &str) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(fnv1a(label.as_bytes(), FNV_OFFSET));
    rng
}

/// Generator for item `index` (a trial, an agent, an episode) of a component.
pub fn substream(seed: u64, label: &str, index: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h = fnv1a(&index.to_le_bytes(), fnv1a(label.as_bytes(), FNV_OFFSET));
    rng.set_stream(h);
    rng
}

/// Derive a child seed, for APIs that take a plain `u64`.
pub fn derive_seed(seed: u64, label: &str, index: u64) -> u64 {
    use rand::RngCore;
    substream(seed, label, index).next_u64()
}
