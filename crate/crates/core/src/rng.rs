//! Reproducible random streams derived from a single root seed.
//!
//! Every consumer asks for a named substream. The substream seed is
//! `splitmix64(root ^ fnv1a64(name))`, and the generator is ChaCha8 seeded
//! from that value through `SeedableRng::seed_from_u64`. Indexed substreams
//! (one per sampler iteration, one per benchmark replicate) additionally set
//! the ChaCha stream id to the index, so they are independent of how many
//! draws earlier indices consumed. ChaCha8 output is platform independent.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SeedStream {
    root: u64,
}

fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl SeedStream {
    pub fn new(root: u64) -> Self {
        SeedStream { root }
    }

    pub fn root(&self) -> u64 {
        self.root
    }

    /// Seed of the named substream.
    pub fn derive(&self, name: &str) -> u64 {
        splitmix64(self.root ^ fnv1a64(name.as_bytes()))
    }

    /// Child stream rooted at the named substream seed.
    pub fn child(&self, name: &str) -> SeedStream {
        SeedStream::new(self.derive(name))
    }

    pub fn rng(&self, name: &str) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.derive(name))
    }

    pub fn rng_indexed(&self, name: &str, index: u64) -> ChaCha8Rng {
        let mut rng = self.rng(name);
        rng.set_stream(index);
        rng
    }
}
