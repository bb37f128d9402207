//! Seeding.
//!
//! Every random stream in the crate is a `ChaCha8Rng` (counter-based,
//! stable across platforms) keyed by a 64-bit seed. Per-trial streams are
//! derived from a master seed with a SplitMix64-style mix of
//! `(master, trial_index, role)`, so trials never share a stream and the
//! result of trial `i` does not depend on which thread ran it or in what
//! order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// What a derived stream is used for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StreamRole {
    Signal,
    Encoder,
    Directions,
    Patches,
    Other(u64),
}

impl StreamRole {
    fn tag(self) -> u64 {
        match self {
            StreamRole::Signal => 0x5167_6e61_6c00_0001,
            StreamRole::Encoder => 0x456e_636f_6465_0002,
            StreamRole::Directions => 0x4469_7265_6374_0003,
            StreamRole::Patches => 0x5061_7463_6865_0004,
            StreamRole::Other(v) => 0x4f74_6865_7200_0000 ^ v.rotate_left(17),
        }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Child seed for `(master, index, role)`.
pub fn derive_seed(master: u64, index: u64, role: StreamRole) -> u64 {
    let a = splitmix64(master);
    let b = splitmix64(a ^ index.wrapping_mul(0xd1b5_4a32_d192_ed03));
    splitmix64(b ^ role.tag())
}

pub fn rng_from_seed(seed: u64) -> Rng {
    Rng::seed_from_u64(seed)
}

pub fn child_rng(master: u64, index: u64, role: StreamRole) -> Rng {
    rng_from_seed(derive_seed(master, index, role))
}
