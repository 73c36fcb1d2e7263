//! Seeded random streams.
//!
//! Every stochastic stage draws from xoshiro256** seeded through splitmix64
//! (`Xoshiro256StarStar::seed_from_u64`). Sub-streams for independent trials
//! are keyed by a counter so results never depend on evaluation order.

use rand::SeedableRng;
use rand_xoshiro::Xoshiro256StarStar;

pub type StageRng = Xoshiro256StarStar;

pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn stream(seed: u64) -> StageRng {
    Xoshiro256StarStar::seed_from_u64(seed)
}

/// Independent stream number `index` derived from `seed`.
pub fn substream(seed: u64, index: u64) -> StageRng {
    Xoshiro256StarStar::seed_from_u64(splitmix64(seed ^ splitmix64(index.wrapping_add(0x5EED))))
}
