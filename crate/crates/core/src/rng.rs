//! Counter-based deterministic random number generation.
//!
//! Every stochastic draw in this crate is a pure function of
//! `(seed, stream, epoch, index)`. There is no shared generator state, so
//! per-edge draws can be evaluated in any order (or in parallel) and still
//! reproduce bit-identically. Streams keep unrelated consumers (edge
//! dropping, edge adding, the synthetic benchmark, k-means seeding) from
//! ever colliding on the same counter.

/// Stream tag for edge-dropping Bernoulli masks.
pub const STREAM_DROP: u64 = 0;
/// Stream tag for cluster-edge-adding Bernoulli masks.
pub const STREAM_ADD: u64 = 1;
/// Stream tag for k-means center seeding.
pub const STREAM_KMEANS: u64 = 2;
/// Stream tag for eigensolver start vectors.
pub const STREAM_EIGEN: u64 = 3;
/// Stream tag for holdout-mask selection.
pub const STREAM_HOLDOUT: u64 = 4;
/// Stream tags for the synthetic benchmark generator.
pub const STREAM_SYNTH_CENTERS: u64 = 16;
pub const STREAM_SYNTH_FEATURES: u64 = 17;
pub const STREAM_SYNTH_EDGES: u64 = 18;
pub const STREAM_SYNTH_REWIRE: u64 = 19;

/// SplitMix64 finalizer; full-period avalanche over u64.
#[inline]
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// One deterministic u64 for the given key.
#[inline]
pub fn draw_u64(seed: u64, stream: u64, epoch: u64, index: u64) -> u64 {
    let mut h = mix(seed ^ 0x9e37_79b9_7f4a_7c15);
    h = mix(h ^ stream.wrapping_mul(0xbf58_476d_1ce4_e5b9));
    h = mix(h ^ epoch.wrapping_mul(0x94d0_49bb_1331_11eb));
    mix(h ^ index.wrapping_mul(0x2545_f491_4f6c_dd1d))
}

/// One deterministic uniform draw in [0, 1) for the given key.
#[inline]
pub fn unit_uniform(seed: u64, stream: u64, epoch: u64, index: u64) -> f64 {
    // 53 high bits -> [0, 1) on the dyadic grid.
    (draw_u64(seed, stream, epoch, index) >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// One deterministic standard Gaussian draw (Box-Muller, cosine branch).
#[inline]
pub fn unit_gaussian(seed: u64, stream: u64, epoch: u64, index: u64) -> f64 {
    // u1 in (0, 1] so the log never sees zero.
    let u1 = ((draw_u64(seed, stream, epoch, index.wrapping_mul(2)) >> 11) + 1) as f64
        * (1.0 / (1u64 << 53) as f64);
    let u2 = unit_uniform(seed, stream, epoch, index.wrapping_mul(2).wrapping_add(1));
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Deterministically fold two seeds into one substream seed.
pub fn combine(a: u64, b: u64) -> u64 {
    mix(a ^ mix(b ^ 0x6a09_e667_f3bc_c909))
}

/// A sequential generator over one `(seed, stream)` substream, for the few
/// places that are inherently order-dependent (k-means++ seeding).
#[derive(Debug, Clone)]
pub struct SeededStream {
    seed: u64,
    stream: u64,
    counter: u64,
}

impl SeededStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        Self {
            seed,
            stream,
            counter: 0,
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        let v = draw_u64(self.seed, self.stream, 0, self.counter);
        self.counter += 1;
        v
    }

    pub fn next_uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform index in [0, bound).
    pub fn next_index(&mut self, bound: usize) -> usize {
        assert!(bound > 0, "bound must be positive");
        // Multiply-shift; bias is < 2^-53 * bound, irrelevant here.
        (self.next_uniform() * bound as f64) as usize % bound
    }
}
