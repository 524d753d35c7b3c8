//! Deterministic seed derivation.
//!
//! Every source of randomness in a run gets its own ChaCha stream whose seed
//! is a SplitMix64 hash of `(master seed, repetition, purpose, index)`, so
//! streams never share state and adding draws to one cannot shift another.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Independent random streams inside one repetition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Purpose {
    Contexts,
    Noise,
    ExplorePrices,
    Refinement,
    Parameters,
    Auxiliary,
}

impl Purpose {
    fn tag(self) -> u64 {
        match self {
            Purpose::Contexts => 0x11,
            Purpose::Noise => 0x22,
            Purpose::ExplorePrices => 0x33,
            Purpose::Refinement => 0x44,
            Purpose::Parameters => 0x55,
            Purpose::Auxiliary => 0x66,
        }
    }
}

pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Folds a sequence of words into one seed.
pub fn derive(words: &[u64]) -> u64 {
    words
        .iter()
        .fold(0x5E_ED0F_0B17u64, |acc, &w| splitmix64(acc ^ splitmix64(w)))
}

/// Seed factory for a single repetition.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeedStream {
    master: u64,
    repetition: u64,
}

impl SeedStream {
    pub fn new(master: u64, repetition: u64) -> Self {
        SeedStream { master, repetition }
    }

    pub fn master(&self) -> u64 {
        self.master
    }

    pub fn repetition(&self) -> u64 {
        self.repetition
    }

    pub fn seed(&self, purpose: Purpose, index: u64) -> u64 {
        derive(&[self.master, self.repetition, purpose.tag(), index])
    }

    pub fn rng(&self, purpose: Purpose) -> ChaCha8Rng {
        self.indexed_rng(purpose, 0)
    }

    pub fn indexed_rng(&self, purpose: Purpose, index: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed(purpose, index))
    }
}
