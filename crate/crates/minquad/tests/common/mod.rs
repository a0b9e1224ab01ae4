//! Shared helpers for the integration and acceptance suites.

#![allow(dead_code)]

use nalgebra::DVector;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use minquad_core::barrier::QuadraticBarrierPair;

/// All sampling randomness in the test suites is seeded from `BF_SEED`
/// (default 814) so runs are reproducible.
pub fn seed() -> u64 {
    std::env::var("BF_SEED")
        .ok()
        .and_then(|s| s.parse().ok())
        .unwrap_or(814)
}

pub fn rng(stream: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed() ^ stream)
}

/// Standard normal via Box-Muller.
pub fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = rng.random_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.random_range(0.0..1.0);
    (-2.0 * u1.ln()).sqrt() * (core::f64::consts::TAU * u2).cos()
}

/// Uniform direction on the unit sphere in `dim` dimensions.
pub fn unit_direction(rng: &mut ChaCha8Rng, dim: usize) -> DVector<f64> {
    loop {
        let v = DVector::from_fn(dim, |_, _| gaussian(rng));
        let n = v.norm();
        if n > 1e-6 {
            return v / n;
        }
    }
}

/// Random state in the pair's shell `-1 < B(x) <= 0`: `x = x_e + L u rho`
/// with `L L^T = Q`, `u` a unit direction, and `B = rho^2 - 1`.
pub fn sample_shell(pair: &QuadraticBarrierPair, rng: &mut ChaCha8Rng) -> DVector<f64> {
    let chol = pair.q().clone().cholesky().expect("pair Q is PD");
    let dir = unit_direction(rng, pair.state_dim());
    let rho = rng.random_range(1e-6f64..=1.0).sqrt();
    pair.x_e() + chol.l() * dir * rho
}

/// Pin BLAS to one thread before anything numeric runs, matching the
/// binary's behavior so outputs are reproducible.
pub fn pin_blas() {
    static ONCE: std::sync::Once = std::sync::Once::new();
    ONCE.call_once(|| {
        if std::env::var_os("OPENBLAS_NUM_THREADS").is_none() {
            std::env::set_var("OPENBLAS_NUM_THREADS", "1");
        }
    });
}
