//! Sampling helpers shared by the signal generators and the safeguards.
//!
//! Gaussian variates come from the Box–Muller transform so that streams are
//! reproducible from the seeded generator alone.

use nalgebra::DVector;
use rand::Rng;

/// Fills `out` with independent standard normal variates.
pub fn fill_standard_normal<R: Rng + ?Sized>(rng: &mut R, out: &mut [f64]) {
    let mut chunks = out.chunks_exact_mut(2);
    for pair in &mut chunks {
        let (a, b) = box_muller(rng);
        pair[0] = a;
        pair[1] = b;
    }
    if let [last] = chunks.into_remainder() {
        *last = box_muller(rng).0;
    }
}

/// One standard normal variate (the second Box–Muller output is discarded).
pub fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    box_muller(rng).0
}

fn box_muller<R: Rng + ?Sized>(rng: &mut R) -> (f64, f64) {
    // u1 in (0, 1] keeps the logarithm finite.
    let u1 = 1.0 - rng.random::<f64>();
    let u2 = rng.random::<f64>();
    let radius = (-2.0 * u1.ln()).sqrt();
    let angle = std::f64::consts::TAU * u2;
    (radius * angle.cos(), radius * angle.sin())
}

/// Uniform draw from the unit sphere in `R^dim`.
pub fn unit_sphere<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> DVector<f64> {
    assert!(dim > 0, "sphere dimension must be positive");
    let mut v = DVector::zeros(dim);
    loop {
        fill_standard_normal(rng, v.as_mut_slice());
        let norm = v.norm();
        if norm > 1e-300 {
            v /= norm;
            return v;
        }
    }
}

/// Uniform random sign, `+1.0` or `-1.0`.
pub fn random_sign<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    if rng.random::<bool>() {
        1.0
    } else {
        -1.0
    }
}
