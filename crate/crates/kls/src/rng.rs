//! Counter-based deterministic PRNG.
//!
//! Every random quantity in the crate is addressed by `(seed, stream, counter)`
//! so that binning tables, encoder noise, and channel noise come from
//! independent reproducible streams and can be regenerated out of order (e.g.
//! from parallel workers) without shared state.
//!
//! The generator is SplitMix64 evaluated at an arbitrary position: a Weyl
//! sequence keyed by `(seed, stream)` fed through the SplitMix64 finalizer.
//! Not cryptographically secure; never use it for real keys.

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Raw output for position `counter` of stream `(seed, stream)`.
#[inline]
pub fn keyed_u64(seed: u64, stream: u64, counter: u64) -> u64 {
    let key = mix64(mix64(seed) ^ mix64(stream.wrapping_mul(GOLDEN) ^ GOLDEN));
    mix64(key.wrapping_add(counter.wrapping_add(1).wrapping_mul(GOLDEN)))
}

/// Sequential view over one `(seed, stream)` counter stream.
#[derive(Debug, Clone)]
pub struct CounterRng {
    seed: u64,
    stream: u64,
    counter: u64,
}

impl CounterRng {
    pub fn new(seed: u64, stream: u64) -> Self {
        Self {
            seed,
            stream,
            counter: 0,
        }
    }

    /// Start at an explicit counter, e.g. `trial * n` for per-trial substreams.
    pub fn at(seed: u64, stream: u64, counter: u64) -> Self {
        Self {
            seed,
            stream,
            counter,
        }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        let v = keyed_u64(self.seed, self.stream, self.counter);
        self.counter += 1;
        v
    }

    /// Uniform in `[0, 1)` with 53 random bits.
    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in `[0, m)`. Modulo bias is below 2^-39 for the `m <= 2^24`
    /// alphabets used here.
    #[inline]
    pub fn next_below(&mut self, m: u64) -> u64 {
        debug_assert!(m >= 1);
        self.next_u64() % m
    }

    /// Sample an index from a probability row by inverse CDF.
    pub fn sample_pmf(&mut self, probs: &[f64]) -> usize {
        let u = self.next_f64();
        let mut acc = 0.0;
        for (i, &p) in probs.iter().enumerate() {
            acc += p;
            if u < acc {
                return i;
            }
        }
        probs.len() - 1
    }

    /// Point drawn uniformly from the probability simplex (flat Dirichlet),
    /// via normalized exponential spacings.
    pub fn sample_simplex(&mut self, k: usize) -> Vec<f64> {
        let mut v: Vec<f64> = (0..k).map(|_| -(1.0 - self.next_f64()).ln()).collect();
        let sum: f64 = v.iter().sum();
        for x in &mut v {
            *x /= sum;
        }
        v
    }
}
