//! Seeded random streams shared by the generators, the trainer and the
//! baselines.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Independent seed for sub-stream `stream` of `base` (splitmix64 finalizer).
pub fn derive_seed(base: u64, stream: u64) -> u64 {
    let mut z = base ^ stream.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Stream tag for a decade, so that per-decade draws do not depend on the
/// order decades are processed in.
pub fn decade_stream(decade: i32) -> u64 {
    decade as i64 as u64
}
