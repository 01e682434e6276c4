//! Seeded random streams.
//!
//! Every experiment is driven by ChaCha20 with an explicit 64-bit seed.
//! Replication `k` of an experiment draws from stream `k` of that seed, so
//! replications can run in any order or in parallel and still reproduce
//! bit for bit.

use rand::{Rng, SeedableRng};
pub use rand_chacha::ChaCha20Rng;

use crate::math;

/// Generator for the whole run (stream 0).
pub fn seeded(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

/// Independent stream `index` of `seed`.
pub fn substream(seed: u64, index: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Uniform on the open interval (0, 1).
pub fn uniform_open<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    ((rng.next_u64() >> 11) as f64 + 0.5) / (1u64 << 53) as f64
}

/// Standard normal draw by the Box–Muller transform (one value per call).
pub fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let u1 = uniform_open(rng);
    let u2 = uniform_open(rng);
    math::sqrt(-2.0 * math::ln(u1)) * math::cos(core::f64::consts::TAU * u2)
}
