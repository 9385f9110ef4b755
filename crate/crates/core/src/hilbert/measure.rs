use rand::Rng;

use super::{inner, DensityOperator, Mat3, Projector, StateVector};

/// Binary Lüders measurement `{q, 1 − q}` on a pure state.
///
/// Returns `true` ("yes") with probability `⟨ψ|q|ψ⟩` and the normalized
/// image of the state under the fired projection.
pub fn lueders_measure<R: Rng + ?Sized>(
    state: &StateVector,
    q: &Projector,
    rng: &mut R,
) -> (bool, StateVector) {
    let chi = q.ket().as_vec();
    let psi = state.as_vec();
    let amplitude = inner(chi, psi);
    let prob_yes = amplitude.norm_sqr().clamp(0.0, 1.0);
    let hit = rng.random::<f64>() < prob_yes;
    let image = if hit { chi * amplitude } else { psi - chi * amplitude };
    // A branch is only sampled when its probability is positive, so the image is nonzero.
    let post = StateVector::new(image).unwrap_or_else(|_| state.clone());
    (hit, post)
}

/// Binary Lüders measurement on a mixed state: `qρq/tr(ρq)` or
/// `(1−q)ρ(1−q)/tr(ρ(1−q))`.
pub fn lueders_measure_mixed<R: Rng + ?Sized>(
    rho: &DensityOperator,
    q: &Projector,
    rng: &mut R,
) -> (bool, DensityOperator) {
    let prob_yes = rho.expectation(q).clamp(0.0, 1.0);
    let hit = rng.random::<f64>() < prob_yes;
    let branch = if hit {
        *q.matrix()
    } else {
        Mat3::identity() - q.matrix()
    };
    let image = branch * rho.matrix() * branch;
    let post = DensityOperator::normalized(image).unwrap_or_else(|_| rho.clone());
    (hit, post)
}
