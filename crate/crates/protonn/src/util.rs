//! Seed derivation and portable sampling primitives shared across modules.
//!
//! All randomness in the crate flows through `ChaCha8Rng` seeded with 64-bit
//! values, normals come from a Box-Muller transform over the generator's
//! uniform doubles, and sub-seeds are derived with splitmix64. Pinning the
//! algorithms (rather than platform-dependent library defaults) makes every
//! sampled byte reproducible across machines.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// splitmix64 finalizer; used to derive independent sub-seeds from a master
/// seed and a counter.
pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Sub-seed for stream `stream` of a master seed.
pub fn derive_seed(master: u64, stream: u64) -> u64 {
    splitmix64(master ^ stream.wrapping_mul(0xA076_1D64_78BD_642F))
}

/// One standard normal deviate via Box-Muller (cosine branch).
pub(crate) fn standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    // 1 - u lies in (0, 1], so the log is finite.
    let u1: f64 = 1.0 - rng.gen::<f64>();
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Uniform draw from the ball of the given center and radius: normalized
/// Gaussian direction times `radius * U^(1/d)`.
pub(crate) fn sample_ball(rng: &mut ChaCha8Rng, center: &[f64], radius: f64) -> Vec<f64> {
    let d = center.len();
    let mut dir = vec![0.0; d];
    loop {
        let mut norm_sq = 0.0;
        for v in dir.iter_mut() {
            *v = standard_normal(rng);
            norm_sq += *v * *v;
        }
        if norm_sq > 1e-300 {
            let r = radius * rng.gen::<f64>().powf(1.0 / d as f64) / norm_sq.sqrt();
            for (v, c) in dir.iter_mut().zip(center) {
                *v = c + *v * r;
            }
            return dir;
        }
    }
}
