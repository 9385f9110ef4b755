use rand::Rng;
use rand_distr::StandardNormal;

use super::{c, inner, StateVector, Vec3};

/// Unitarily invariant random unit vector: six independent standard
/// Gaussians as real and imaginary parts, then normalized.
pub fn haar_random_unit<R: Rng + ?Sized>(rng: &mut R) -> StateVector {
    loop {
        let v = Vec3::from_fn(|_, _| c(rng.sample(StandardNormal), rng.sample(StandardNormal)));
        if v.norm_squared() > 1e-24 {
            return StateVector::new(v).expect("nonzero");
        }
    }
}

/// Uniform random point of the real unit sphere.
pub fn random_real_unit<R: Rng + ?Sized>(rng: &mut R) -> StateVector {
    loop {
        let v = Vec3::from_fn(|_, _| c(rng.sample(StandardNormal), 0.0));
        if v.norm_squared() > 1e-24 {
            return StateVector::new(v).expect("nonzero");
        }
    }
}

/// Uniform random ray in the orthogonal complement of `v`.
pub fn haar_random_in_complement<R: Rng + ?Sized>(v: &StateVector, rng: &mut R) -> StateVector {
    let v = v.as_vec();
    loop {
        let g = haar_random_unit(rng).into_vec();
        let projected = g - v * inner(v, &g);
        if projected.norm_squared() > 1e-12 {
            return StateVector::new(projected).expect("nonzero");
        }
    }
}
