//! Deterministic RNG stream derivation.
//!
//! Every stochastic operation takes an explicit seed. Experiment cells derive
//! independent streams from `(master_seed, tags...)` so that results do not
//! depend on scheduling order.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives an independent ChaCha stream from a master seed and a tag path.
///
/// Distinct tag paths yield streams that are independent for all practical
/// purposes; identical inputs yield bitwise-identical streams.
pub fn derive_rng(master_seed: u64, tags: &[u64]) -> ChaCha12Rng {
    let mut state = master_seed ^ 0x6a09_e667_f3bc_c908;
    let _ = splitmix64(&mut state);
    for &tag in tags {
        state ^= tag.wrapping_mul(0x9e37_79b9_7f4a_7c15);
        let _ = splitmix64(&mut state);
    }
    let mut seed = [0u8; 32];
    for chunk in seed.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    ChaCha12Rng::from_seed(seed)
}
