//! Counter-based deterministic random number generation.
//!
//! Every stochastic path in the crate draws from a pure function of
//! `(seed, stream, counter)`. There is no mutable generator state to share,
//! so Monte Carlo batches can be partitioned across threads arbitrarily and
//! still reproduce the exact same draws. The mixer is SplitMix64 evaluated in
//! random-access form.

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

#[inline]
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// A stateless stream of random values addressed by counter.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CounterRng {
    base: u64,
}

impl CounterRng {
    /// Stream `stream` of the generator seeded with `seed`. Distinct streams
    /// are statistically independent for all practical purposes.
    pub fn new(seed: u64, stream: u64) -> Self {
        CounterRng {
            base: mix(seed ^ mix(stream.wrapping_mul(GOLDEN).wrapping_add(0x1234_5678_9abc_def0))),
        }
    }

    #[inline]
    pub fn u64_at(&self, counter: u64) -> u64 {
        mix(self.base.wrapping_add(counter.wrapping_add(1).wrapping_mul(GOLDEN)))
    }

    /// Uniform on [0, 1), 53-bit resolution.
    #[inline]
    pub fn uniform_at(&self, counter: u64) -> f64 {
        (self.u64_at(counter) >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform on (0, 1], safe as a log argument.
    #[inline]
    pub fn uniform_open_at(&self, counter: u64) -> f64 {
        ((self.u64_at(counter) >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform on [-1, 1).
    #[inline]
    pub fn symmetric_at(&self, counter: u64) -> f64 {
        2.0 * self.uniform_at(counter) - 1.0
    }

    /// A uniform random sign.
    #[inline]
    pub fn sign_at(&self, counter: u64) -> f64 {
        if self.u64_at(counter) & 1 == 0 {
            1.0
        } else {
            -1.0
        }
    }

    /// Standard normal via Box-Muller. Consumes counters `2k` and `2k+1` of a
    /// dedicated normal stream, addressed here by `k`.
    #[inline]
    pub fn normal_at(&self, k: u64) -> f64 {
        let u1 = self.uniform_open_at(2 * k);
        let u2 = self.uniform_at(2 * k + 1);
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }
}
