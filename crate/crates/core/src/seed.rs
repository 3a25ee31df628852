//! Seed derivation and random streams.
//!
//! Every random draw in the toolkit comes from a ChaCha8 generator. Sub-seeds
//! for named components are derived from a single root seed by hashing, so
//! adding a new consumer of randomness never perturbs existing streams.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(FNV_OFFSET, |h, &b| (h ^ u64::from(b)).wrapping_mul(FNV_PRIME))
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Stable 64-bit hash of a string, used for component names and config ids.
pub fn stable_hash(text: &str) -> u64 {
    fnv1a(text.as_bytes())
}

/// Seed for the named component under `root`.
pub fn derive_seed(root: u64, component: &str) -> u64 {
    splitmix64(root ^ splitmix64(fnv1a(component.as_bytes())))
}

/// Seed for the `index`-th draw of a named component.
pub fn derive_indexed(root: u64, component: &str, index: u64) -> u64 {
    splitmix64(derive_seed(root, component) ^ splitmix64(index))
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent stream `stream` of the generator seeded with `seed`.
pub fn rng_stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}
