//! Seed derivation. Every consumer of randomness in a run gets its own
//! ChaCha stream keyed on (root seed, stream name, index), so adding draws in
//! one place never shifts another.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn derive_seed(root: u64, stream: &str, index: u64) -> u64 {
    let mut h = splitmix64(root);
    for b in stream.bytes() {
        h = splitmix64(h ^ u64::from(b));
    }
    splitmix64(h ^ splitmix64(index))
}

pub fn stream(root: u64, name: &str, index: u64) -> Rng {
    Rng::seed_from_u64(derive_seed(root, name, index))
}

pub fn from_seed(seed: u64) -> Rng {
    Rng::seed_from_u64(seed)
}
