//! Seedable, splittable random streams.
//!
//! Every experiment derives its generators from a master seed by hashing a
//! path of labels, e.g. `master / "sweep" / N / repeat / "train"`. Two
//! different paths give statistically independent ChaCha8 streams, and the
//! same path always gives the same stream, regardless of the order in which
//! parallel workers pick up jobs.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The generator used everywhere in the crate.
pub type StreamRng = ChaCha8Rng;

/// A node in the seed derivation tree.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SeedStream {
    key: u64,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

impl SeedStream {
    pub fn new(master: u64) -> Self {
        Self {
            key: splitmix64(master),
        }
    }

    /// Child stream named by a string label.
    pub fn child(&self, label: &str) -> Self {
        Self {
            key: splitmix64(self.key ^ splitmix64(fnv1a(label.as_bytes()))),
        }
    }

    /// Child stream named by an integer index.
    pub fn index(&self, i: u64) -> Self {
        Self {
            key: splitmix64(self.key.rotate_left(17) ^ splitmix64(i ^ 0xA5A5_A5A5_A5A5_A5A5)),
        }
    }

    /// 64-bit seed for this node, suitable for `StreamRng::seed_from_u64`.
    pub fn seed(&self) -> u64 {
        self.key
    }

    pub fn rng(&self) -> StreamRng {
        StreamRng::seed_from_u64(self.key)
    }
}

/// Generator for a raw 64-bit seed.
pub fn rng_from_seed(seed: u64) -> StreamRng {
    StreamRng::seed_from_u64(seed)
}
