//! Deterministic seedable PRNG with splittable streams.
//!
//! The generator is a splitmix64 sequence. Child streams are derived from the
//! parent's *seed* plus a label, not from the parent's position, so the same
//! `(seed, label)` pair always names the same stream regardless of how much
//! the parent has been consumed.

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seeded pseudo-random number generator.
#[derive(Debug, Clone)]
pub struct Prng {
    seed: u64,
    state: u64,
}

impl Prng {
    pub fn new(seed: u64) -> Self {
        Prng { seed, state: seed }
    }

    /// The seed this stream was created with.
    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Derive an independent child stream from this stream's seed and a label.
    ///
    /// Deterministic: does not consume or depend on the parent's position.
    /// Distinct labels yield decorrelated streams.
    pub fn split(&self, label: u64) -> Prng {
        Prng::new(mix(self.seed ^ mix(label.wrapping_add(GOLDEN))))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN);
        mix(self.state)
    }

    /// Uniform draw in `[0, 1)` with 53 random bits.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn next_f32(&mut self) -> f32 {
        self.next_f64() as f32
    }

    /// Uniform draw in `[lo, hi]`.
    pub fn uniform(&mut self, lo: f32, hi: f32) -> f32 {
        lo + (hi - lo) * self.next_f32()
    }

    /// Uniform index in `[0, n)` via the multiply-shift reduction.
    pub fn next_below(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        ((self.next_u64() as u128 * n as u128) >> 64) as usize
    }

    /// One standard-normal draw (Box–Muller on two uniforms).
    ///
    /// `u1` is clamped away from zero so `ln(u1)` stays finite.
    pub fn normal(&mut self) -> f32 {
        let u1 = self.next_f64().max(1e-12);
        let u2 = self.next_f64();
        ((-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()) as f32
    }

    /// In-place Fisher–Yates shuffle.
    pub fn shuffle<T>(&mut self, xs: &mut [T]) {
        for i in (1..xs.len()).rev() {
            let j = self.next_below(i + 1);
            xs.swap(i, j);
        }
    }

    /// `k` distinct indices drawn uniformly from `0..n`, in draw order.
    pub fn sample_indices(&mut self, n: usize, k: usize) -> Vec<usize> {
        assert!(k <= n, "cannot draw {k} distinct indices from 0..{n}");
        let mut pool: Vec<usize> = (0..n).collect();
        for i in 0..k {
            let j = i + self.next_below(n - i);
            pool.swap(i, j);
        }
        pool.truncate(k);
        pool
    }
}

/// `n` independent standard-normal draws from `prng`.
pub fn sample_standard_normal(prng: &mut Prng, n: usize) -> Vec<f32> {
    (0..n).map(|_| prng.normal()).collect()
}
