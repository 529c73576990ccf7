//! Counter-based random number generation.
//!
//! Every random draw in the library comes from a [`CounterRng`] keyed by a
//! [`StreamKey`]: a 64-bit value obtained by absorbing the master seed and a
//! sequence of identifying words (stream tag, replica index, vertex key,
//! step, ...). The mapping (key, counter) -> u64 is a pure function, so any
//! parallel schedule that assigns the same keys produces the same draws.

/// Words mixed into stream keys to separate independent randomness sources.
pub mod tag {
    pub const INIT: u64 = 0x1111_2222_3333_4441;
    pub const NOISE: u64 = 0x5555_6666_7777_8882;
    pub const TREE: u64 = 0x9999_aaaa_bbbb_ccc3;
    pub const GRAPH: u64 = 0xdddd_eeee_ffff_0004;
    pub const CHECK: u64 = 0x1234_5678_9abc_def5;
}

#[inline]
fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Identifier of an independent random stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StreamKey(u64);

impl StreamKey {
    pub fn new(seed: u64) -> Self {
        StreamKey(splitmix(seed ^ 0x243f_6a88_85a3_08d3))
    }

    /// Absorb one identifying word, returning a derived key.
    #[must_use]
    pub fn push(self, word: u64) -> Self {
        StreamKey(splitmix(self.0.rotate_left(29) ^ word.wrapping_mul(0x9e37_79b9_7f4a_7c15)))
    }

    pub fn value(self) -> u64 {
        self.0
    }
}

/// Deterministic generator: a pure function of (key, counter).
#[derive(Debug, Clone)]
pub struct CounterRng {
    key: u64,
    counter: u64,
    spare_normal: Option<f64>,
}

impl CounterRng {
    pub fn from_key(key: StreamKey) -> Self {
        CounterRng { key: key.0, counter: 0, spare_normal: None }
    }

    pub fn new(seed: u64, words: &[u64]) -> Self {
        let mut k = StreamKey::new(seed);
        for &w in words {
            k = k.push(w);
        }
        Self::from_key(k)
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.counter = self.counter.wrapping_add(1);
        splitmix(self.key ^ splitmix(self.counter))
    }

    /// Uniform draw in the open interval (0, 1).
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        (((self.next_u64() >> 11) as f64) + 0.5) * (1.0 / 9_007_199_254_740_992.0)
    }

    /// Uniform draw in [lo, hi).
    #[inline]
    pub fn uniform_in(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    /// Standard normal via Box-Muller; the second value of each pair is
    /// cached on the stream.
    pub fn standard_normal(&mut self) -> f64 {
        if let Some(z) = self.spare_normal.take() {
            return z;
        }
        let u1 = self.uniform();
        let u2 = self.uniform();
        let mag = (-2.0 * u1.ln()).sqrt();
        let (s, c) = (2.0 * std::f64::consts::PI * u2).sin_cos();
        self.spare_normal = Some(mag * s);
        mag * c
    }

    pub fn fill_standard_normal(&mut self, out: &mut [f64]) {
        for slot in out.iter_mut() {
            *slot = self.standard_normal();
        }
    }

    /// Unbiased draw from {0, 1, ..., n-1}.
    pub fn below(&mut self, n: u64) -> u64 {
        assert!(n > 0);
        let zone = u64::MAX - (u64::MAX % n);
        loop {
            let x = self.next_u64();
            if x < zone {
                return x % n;
            }
        }
    }

    /// Fisher-Yates shuffle.
    pub fn shuffle<T>(&mut self, xs: &mut [T]) {
        for i in (1..xs.len()).rev() {
            let j = self.below(i as u64 + 1) as usize;
            xs.swap(i, j);
        }
    }
}

/// Stable 64-bit key for a vertex label given by its digit sequence.
pub fn label_key(digits: &[u32]) -> u64 {
    let mut k = StreamKey::new(0x7265_6c61_6265_6c73);
    k = k.push(digits.len() as u64);
    for &d in digits {
        k = k.push(d as u64);
    }
    k.value()
}
