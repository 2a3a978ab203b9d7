//! Seeded, splittable random streams for ensemble generation.
//!
//! One master seed from the run configuration; every consumer derives an
//! independent stream by name, so adding a new ensemble never perturbs the
//! draws of an existing one. ChaCha8 is counter-based and produces identical
//! streams on every platform.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Clone)]
pub struct RunRng {
    seed: u64,
}

impl RunRng {
    pub fn new(seed: u64) -> Self {
        RunRng { seed }
    }

    /// Independent stream identified by a label.
    pub fn stream(&self, label: &str) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(fnv1a(label.as_bytes()));
        rng
    }
}

/// FNV-1a 64-bit hash; also used for cache keys and config fingerprints.
pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

/// Uniform point in `[-a, a]^3`.
pub fn uniform_in_box(rng: &mut impl Rng, a: f64) -> [f64; 3] {
    [
        rng.gen_range(-a..a),
        rng.gen_range(-a..a),
        rng.gen_range(-a..a),
    ]
}

/// Uniform point on the unit sphere (Marsaglia rejection).
pub fn uniform_on_sphere(rng: &mut impl Rng) -> [f64; 3] {
    loop {
        let x: f64 = rng.gen_range(-1.0..1.0);
        let y: f64 = rng.gen_range(-1.0..1.0);
        let s = x * x + y * y;
        if s < 1.0 && s > 0.0 {
            let t = 2.0 * (1.0 - s).sqrt();
            return [x * t, y * t, 1.0 - 2.0 * s];
        }
    }
}
