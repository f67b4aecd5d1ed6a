//! Reproducible random streams.
//!
//! All randomness in the crate flows through [`SplitMix64`]: a 64-bit state
//! advanced by the golden-ratio increment `0x9E37_79B9_7F4A_7C15` and finalized
//! with the mixer constants `0xBF58_476D_1CE4_E5B9` / `0x94D0_49BB_1331_11EB`
//! (shifts 30, 27, 31). The generator has no platform-dependent pieces, so a
//! seed reproduces the same stream everywhere.
//!
//! Independent substreams are derived with [`derive_seed`], which mixes a parent
//! seed with a stream label and an index. Trials, noise draws and sampling
//! orders each get their own substream so that running work in any order (or
//! concurrently) yields identical numbers.

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive the seed of substream `index` under label `stream` of `parent`.
pub fn derive_seed(parent: u64, stream: u64, index: u64) -> u64 {
    let a = mix64(parent.wrapping_add(GOLDEN_GAMMA));
    let b = mix64(a ^ stream.wrapping_mul(GOLDEN_GAMMA).wrapping_add(0x632B_E59B_D9B4_E019));
    mix64(b ^ index.wrapping_mul(0xD1B5_4A32_D192_ED03).wrapping_add(GOLDEN_GAMMA))
}

/// Stream labels used across the crate.
pub mod streams {
    pub const GRAPH: u64 = 1;
    pub const FEATURES: u64 = 2;
    pub const NOISE: u64 = 3;
    pub const SAMPLING: u64 = 4;
    pub const SPLIT: u64 = 5;
    pub const TRIAL: u64 = 6;
    pub const SPECTRUM: u64 = 7;
    pub const REPEAT: u64 = 8;
}

#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
    spare_normal: Option<f64>,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self {
            state: seed,
            spare_normal: None,
        }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN_GAMMA);
        mix64(self.state)
    }

    /// Uniform in [0, 1) with 53 random bits.
    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer in `0..bound` (Lemire's multiply-shift with rejection).
    pub fn below(&mut self, bound: usize) -> usize {
        assert!(bound > 0, "below(0)");
        let bound = bound as u64;
        let threshold = bound.wrapping_neg() % bound;
        loop {
            let m = (self.next_u64() as u128) * (bound as u128);
            if (m as u64) >= threshold {
                return (m >> 64) as usize;
            }
        }
    }

    /// Standard normal via the Box–Muller transform; the second variate of
    /// each pair is cached for the next call.
    pub fn normal(&mut self) -> f64 {
        if let Some(z) = self.spare_normal.take() {
            return z;
        }
        // 1 - u keeps the argument of ln in (0, 1].
        let u1 = 1.0 - self.next_f64();
        let u2 = self.next_f64();
        let r = (-2.0 * u1.ln()).sqrt();
        let angle = std::f64::consts::TAU * u2;
        self.spare_normal = Some(r * angle.sin());
        r * angle.cos()
    }

    /// Fisher–Yates shuffle.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i + 1);
            items.swap(i, j);
        }
    }

    pub fn permutation(&mut self, n: usize) -> Vec<usize> {
        let mut p: Vec<usize> = (0..n).collect();
        self.shuffle(&mut p);
        p
    }
}
