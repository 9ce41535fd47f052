//! Seeded random streams. Every randomized step in the toolkit draws from a
//! ChaCha8 stream derived from an explicit seed and a stable string key, so
//! results do not depend on platform, thread count or evaluation order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// 64-bit FNV-1a.
fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |h, &b| {
        (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Independent stream for `(seed, key)`.
pub fn stream(seed: u64, key: &str) -> StreamRng {
    let mixed = splitmix64(seed ^ splitmix64(fnv1a(key.as_bytes())));
    ChaCha8Rng::seed_from_u64(mixed)
}

/// Per-image stream used by pixel subsampling.
pub fn image_stream(seed: u64, image_id: &str) -> StreamRng {
    stream(seed, &format!("image/{image_id}"))
}
