//! Deterministic PRNG for the simulator.
//!
//! Streams are xoshiro256++ (Blackman & Vigna), seeded through SplitMix64 in
//! the usual way. Replicate `k` of a batch draws its seed from
//! `(master_seed, k)` with [`replicate_seed`], so a set of replicates is
//! reproducible regardless of how runs are scheduled across threads.

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 step; also usable as a stateless mixer.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN_GAMMA);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
}

/// Seed for replicate `k` under `master_seed`: one SplitMix64 output taken
/// at the offset `(k+1) * gamma`.
pub fn replicate_seed(master_seed: u64, k: u64) -> u64 {
    let offset = master_seed.wrapping_add((k.wrapping_add(1)).wrapping_mul(GOLDEN_GAMMA));
    SplitMix64::new(offset).next_u64()
}

/// xoshiro256++ stream.
#[derive(Debug, Clone)]
pub struct Xoshiro256PlusPlus {
    s: [u64; 4],
}

impl Xoshiro256PlusPlus {
    pub fn from_seed(seed: u64) -> Self {
        let mut sm = SplitMix64::new(seed);
        let mut s = [0u64; 4];
        for w in s.iter_mut() {
            *w = sm.next_u64();
        }
        if s == [0, 0, 0, 0] {
            s[0] = GOLDEN_GAMMA;
        }
        Self { s }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        let out = (self.s[0].wrapping_add(self.s[3]))
            .rotate_left(23)
            .wrapping_add(self.s[0]);
        let t = self.s[1] << 17;
        self.s[2] ^= self.s[0];
        self.s[3] ^= self.s[1];
        self.s[1] ^= self.s[2];
        self.s[0] ^= self.s[3];
        self.s[2] ^= t;
        self.s[3] = self.s[3].rotate_left(45);
        out
    }

    /// Uniform in `[0, 1)` with 53 random bits.
    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Exponential waiting time with the given rate (`rate > 0`).
    #[inline]
    pub fn next_exp(&mut self, rate: f64) -> f64 {
        // 1 - u lies in (0, 1], so the log is finite.
        -(1.0 - self.next_f64()).ln() / rate
    }

    /// Uniform integer in `[0, bound)` by rejection-free Lemire reduction.
    #[inline]
    pub fn next_below(&mut self, bound: u64) -> u64 {
        ((self.next_u64() as u128 * bound as u128) >> 64) as u64
    }
}
