//! Keyed random streams.
//!
//! Every stochastic routine derives its generator from a base seed plus a
//! purpose tag and an index path, so results never depend on how work is
//! split across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

pub type StreamRng = ChaCha12Rng;

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn fold(tag: &str, path: &[u64]) -> u64 {
    let mut h = 0xCBF2_9CE4_8422_2325u64;
    for b in tag.bytes() {
        h = (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01B3);
    }
    for &p in path {
        h = splitmix(h ^ splitmix(p));
    }
    h
}

/// Generator for `(seed, tag, path)`; identical arguments give identical draws.
pub fn stream(seed: u64, tag: &str, path: &[u64]) -> StreamRng {
    let mut rng = ChaCha12Rng::seed_from_u64(splitmix(seed));
    rng.set_stream(fold(tag, path));
    rng
}
