//! Deterministic seed substream derivation.
//!
//! Every random draw in the pipeline flows from one root seed. Substreams are
//! derived by mixing the root seed with a list of integer tags (group index,
//! participant index, restart number, ...) through splitmix64, so the same
//! (seed, tags) pair always yields the same stream regardless of scheduling.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Derive a child seed from `base` and a tag path.
pub fn derive_seed(base: u64, tags: &[u64]) -> u64 {
    let mut state = splitmix64(base);
    for &t in tags {
        state = splitmix64(state ^ splitmix64(t.wrapping_add(0xa076_1d64_78bd_642f)));
    }
    state
}

/// RNG for the substream identified by (base, tags).
pub fn substream_rng(base: u64, tags: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(base, tags))
}
