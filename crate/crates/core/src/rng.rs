//! Seed derivation.
//!
//! Every stochastic stage draws from a ChaCha8 stream keyed by
//! `(seed, domain, index)`, so per-consumer or per-user work can run in any
//! order, on any number of threads, and still see the same numbers.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Independent purposes that must never share a stream.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u64)]
pub enum Domain {
    Generate = 1,
    Mask = 2,
    Pam = 3,
    Bench = 4,
    Test = 5,
}

/// SplitMix64 finalizer over `seed ^ tag`.
pub fn mix(seed: u64, tag: u64) -> u64 {
    let mut z = seed ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stream `index` of the generator for `(seed, domain)`.
pub fn stream(seed: u64, domain: Domain, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(mix(seed, domain as u64));
    rng.set_stream(index);
    rng
}

/// Round half up: `⌊x + 1/2⌋`, tolerant of representation error just below a half.
pub fn round_half_up(x: f64) -> usize {
    if x <= 0.0 {
        return 0;
    }
    (x + 0.5 + 1e-9).floor() as usize
}
