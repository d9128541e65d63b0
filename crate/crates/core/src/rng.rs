//! Seeded, splittable random streams.
//!
//! Every Monte Carlo trial owns a ChaCha8 stream selected by its index, and
//! every receptor inside a trial owns a disjoint window of that stream. A
//! trial therefore produces the same variates no matter which thread runs
//! it or in which order trials are scheduled.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Width (in 32-bit words) of the block reserved for each receptor.
const RECEPTOR_WINDOW_BITS: u32 = 32;

/// SplitMix64 finalizer.
fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a child seed from a root seed and a path of labels, e.g.
/// `(sweep point, detector)`.
pub fn derive_seed(seed: u64, path: &[u64]) -> u64 {
    path.iter().fold(mix64(seed), |acc, &p| mix64(acc ^ mix64(p)))
}

/// Root of a family of per-trial streams.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SeedStreams {
    seed: u64,
}

impl SeedStreams {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn trial(&self, trial: u64) -> TrialRng {
        let mut base = ChaCha8Rng::seed_from_u64(self.seed);
        base.set_stream(trial);
        TrialRng { main: base.clone(), base }
    }
}

/// Generator for one trial. Draws made through [`RngCore`] come from the
/// trial's main window; [`TrialRng::receptor`] hands out independent
/// per-receptor windows.
#[derive(Clone, Debug)]
pub struct TrialRng {
    main: ChaCha8Rng,
    base: ChaCha8Rng,
}

impl TrialRng {
    pub fn from_seed(seed: u64) -> Self {
        SeedStreams::new(seed).trial(0)
    }

    pub fn receptor(&self, index: u64) -> ChaCha8Rng {
        let mut rng = self.base.clone();
        rng.set_word_pos(u128::from(index + 1) << RECEPTOR_WINDOW_BITS);
        rng
    }
}

impl RngCore for TrialRng {
    fn next_u32(&mut self) -> u32 {
        self.main.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.main.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.main.fill_bytes(dst)
    }
}
