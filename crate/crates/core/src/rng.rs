//! Seed derivation for reproducible, worker-count independent sampling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Generator for the whole of a sequential randomized procedure.
pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent stream for sample `index` under master seed `seed`.
///
/// Streams never overlap, so sample `i` draws the same numbers regardless of
/// which worker evaluates it or in which order.
pub fn stream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Derives a child seed for a named sub-procedure (e.g. backbone vs. cut sampling).
pub fn derive(seed: u64, salt: u64) -> u64 {
    // splitmix64 finalizer
    let mut z = seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
