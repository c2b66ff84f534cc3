//! Seed discipline.
//!
//! One root seed determines every random quantity in a run, and each phase
//! draws from its own ChaCha8 stream so that, e.g., the phase-1 design points
//! are unchanged by how many proposal draws phase 2 makes. Stream keys come
//! from splitmix64 applied to the root seed xored with a phase tag.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Phase tags; the values are part of the reproducibility contract.
pub mod phase {
    pub const INITIAL_DESIGN: u64 = 0x01;
    pub const PROPOSAL_DRAWS: u64 = 0x02;
    pub const TUNING: u64 = 0x03;
    pub const DATA_GEN: u64 = 0x04;
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// ChaCha8 stream for one phase of one run.
pub fn phase_rng(seed: u64, tag: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    let mut z = seed ^ tag.wrapping_mul(0xda94_2042_e4dd_58b5);
    for chunk in key.chunks_exact_mut(8) {
        z = splitmix64(z);
        chunk.copy_from_slice(&z.to_le_bytes());
    }
    ChaCha8Rng::from_seed(key)
}
