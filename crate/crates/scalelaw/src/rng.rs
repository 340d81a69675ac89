//! Deterministic random streams for synthetic data and fit restarts.
//!
//! Everything that consumes randomness in this crate draws from [`Stream`], a
//! SplitMix64 generator with hierarchical splitting. The full algorithm is
//! written out here so another implementation (any language) can reproduce the
//! byte streams from the seed alone:
//!
//! * state update: `state += 0x9E3779B97F4A7C15` (wrapping), then the output
//!   is `mix64` of the new state;
//! * `mix64(z)`: `z ^= z >> 30; z *= 0xBF58476D1CE4E5B9; z ^= z >> 27;
//!   z *= 0x94D049BB133111EB; z ^= z >> 31` (all wrapping);
//! * child stream with tag `t`: seeded by `mix64(seed ^ mix64(t))`, so sibling
//!   streams never overlap and the order of child creation is irrelevant;
//! * uniform double in `[0, 1)`: top 53 bits, `(next() >> 11) * 2^-53`;
//! * standard normal: Box-Muller, `sqrt(-2 ln u1) * cos(2 pi u2)` with
//!   `u1 in (0, 1]` taken as `1 - uniform()`.
//!
//! The integer stream is exactly reproducible everywhere. The float transforms
//! are reproducible on any platform whose `ln`/`cos` round identically, which
//! holds across the IEEE-754 libms this crate targets; within one platform the
//! same seed always yields identical bytes.

const GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

fn mix64(mut z: u64) -> u64 {
    z ^= z >> 30;
    z = z.wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z ^= z >> 27;
    z = z.wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Splittable SplitMix64 stream.
#[derive(Clone, Debug)]
pub struct Stream {
    state: u64,
    seed: u64,
}

impl Stream {
    pub fn new(seed: u64) -> Self {
        Stream { state: seed, seed }
    }

    /// Independent child stream; `tag` identifies the branch (restart index,
    /// grid point index, replicate index). Deterministic in (seed, tag) only.
    pub fn child(&self, tag: u64) -> Stream {
        Stream::new(mix64(self.seed ^ mix64(tag)))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GAMMA);
        mix64(self.state)
    }

    /// Uniform in [0, 1), 53-bit resolution.
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in [lo, hi).
    pub fn uniform_in(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    /// Log-uniform in [lo, hi); requires lo > 0.
    pub fn log_uniform(&mut self, lo: f64, hi: f64) -> f64 {
        debug_assert!(lo > 0.0 && hi >= lo);
        (lo.ln() + (hi.ln() - lo.ln()) * self.uniform()).exp()
    }

    /// Standard normal via Box-Muller on one uniform pair.
    pub fn normal(&mut self) -> f64 {
        let u1 = 1.0 - self.uniform(); // (0, 1], keeps ln finite
        let u2 = self.uniform();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    /// Uniform integer in [0, n) by rejection; unbiased for every n > 0.
    pub fn below(&mut self, n: u64) -> u64 {
        debug_assert!(n > 0);
        let zone = u64::MAX - (u64::MAX % n);
        loop {
            let v = self.next_u64();
            if v < zone {
                return v % n;
            }
        }
    }

    /// Seeded Fisher-Yates permutation of 0..n.
    pub fn permutation(&mut self, n: usize) -> Vec<usize> {
        let mut p: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            let j = self.below(i as u64 + 1) as usize;
            p.swap(i, j);
        }
        p
    }
}
