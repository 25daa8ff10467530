//! Counter-based random streams.
//!
//! A master seed and a domain tag fix a ChaCha8 key; each Monte Carlo unit
//! (path, run) reads its own stream id of that key. Streams never overlap, so
//! results do not depend on scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Domain tags keep the G, W, initial-condition and harness streams disjoint
/// even when the same numeric seed is reused.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Domain {
    GaussianNoise = 0x6761_7573_735f_4701,
    WienerNoise = 0x7769_656e_6572_5702,
    InitialState = 0x696e_6974_5f78_3003,
    Harness = 0x6861_726e_6573_7304,
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StreamFamily {
    key: [u8; 32],
}

impl StreamFamily {
    pub fn new(seed: u64, domain: Domain) -> Self {
        let mut state = seed ^ (domain as u64);
        let mut key = [0u8; 32];
        for chunk in key.chunks_exact_mut(8) {
            chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
        }
        Self { key }
    }

    /// Independent generator for unit `index`.
    pub fn stream(&self, index: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::from_seed(self.key);
        rng.set_stream(index);
        rng
    }
}

/// Derive a child seed, used when only a master seed is configured.
pub fn derive_seed(master: u64, domain: Domain) -> u64 {
    let mut state = master ^ (domain as u64).rotate_left(17);
    splitmix64(&mut state)
}
