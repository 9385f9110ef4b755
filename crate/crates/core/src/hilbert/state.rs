use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::{c, Complex64, HilbertError, Projector, Vec3, EPSILON};
use crate::wire;

/// Unit vector in the game space.
///
/// Construction always normalizes, so every value of this type has norm 1
/// up to rounding. A vector that already has unit norm within [`EPSILON`] is
/// stored bit-for-bit as given, which keeps serialized transcripts replayable.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector(Vec3);

impl StateVector {
    pub fn new(v: Vec3) -> Result<Self, HilbertError> {
        let norm_sq = v.norm_squared();
        if !norm_sq.is_finite() || norm_sq <= f64::MIN_POSITIVE {
            return Err(HilbertError::ZeroVector(norm_sq.sqrt()));
        }
        if (norm_sq - 1.0).abs() <= EPSILON {
            return Ok(Self(v));
        }
        Ok(Self(v.unscale(norm_sq.sqrt())))
    }

    pub fn from_components(components: [Complex64; 3]) -> Result<Self, HilbertError> {
        Self::new(Vec3::from(components))
    }

    /// Builds a state from real components.
    pub fn real(x: f64, y: f64, z: f64) -> Result<Self, HilbertError> {
        Self::from_components([c(x, 0.0), c(y, 0.0), c(z, 0.0)])
    }

    /// Standard basis vector `e_k`, `k ∈ {0, 1, 2}`.
    pub fn basis(k: usize) -> Self {
        assert!(k < 3, "basis index {k} out of range");
        let mut v = Vec3::zeros();
        v[k] = c(1.0, 0.0);
        Self(v)
    }

    pub fn standard_basis() -> [Self; 3] {
        [Self::basis(0), Self::basis(1), Self::basis(2)]
    }

    pub fn as_vec(&self) -> &Vec3 {
        &self.0
    }

    pub fn into_vec(self) -> Vec3 {
        self.0
    }

    pub fn components(&self) -> [Complex64; 3] {
        [self.0[0], self.0[1], self.0[2]]
    }

    pub fn projector(&self) -> Projector {
        Projector::from_state(self)
    }

    /// Componentwise complex conjugate.
    pub fn conj(&self) -> Self {
        Self(self.0.map(|z| z.conj()))
    }

    /// `|⟨self|other⟩|²`, the transition probability between the two rays.
    pub fn overlap(&self, other: &StateVector) -> f64 {
        inner(&self.0, &other.0).norm_sqr()
    }

    pub fn is_real(&self) -> bool {
        self.0.iter().all(|z| z.im == 0.0)
    }

    /// Same ray, compared through `1 - |⟨a|b⟩|²`.
    pub fn same_ray(&self, other: &StateVector, tol: f64) -> bool {
        1.0 - self.overlap(other) <= tol
    }
}

impl Serialize for StateVector {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        wire::serialize_vec3(&self.0, serializer)
    }
}

impl<'de> Deserialize<'de> for StateVector {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let v = wire::deserialize_vec3(deserializer)?;
        StateVector::new(v).map_err(serde::de::Error::custom)
    }
}

/// Hermitian inner product `Σ conj(a_i)·b_i`.
pub fn inner(a: &Vec3, b: &Vec3) -> Complex64 {
    a.dotc(b)
}

/// Formal (bilinear) cross product of two complex 3-vectors.
pub fn cross(a: &Vec3, b: &Vec3) -> Vec3 {
    Vec3::new(
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    )
}

/// The unique ray orthogonal to both `phi` and `psi`, phase-normalized.
///
/// `conj(phi × psi)` is orthogonal to both inputs; its norm is
/// `sqrt(1 - |⟨phi|psi⟩|²)`, so inputs on the same ray are rejected.
pub fn orthogonal_complement_vector(
    phi: &StateVector,
    psi: &StateVector,
) -> Result<StateVector, HilbertError> {
    let chi = cross(phi.as_vec(), psi.as_vec()).map(|z| z.conj());
    let norm = chi.norm();
    if norm <= EPSILON {
        return Err(HilbertError::DegenerateInput(format!(
            "inputs span a single ray (|phi x psi| = {norm:.3e})"
        )));
    }
    Ok(normalize_phase(&StateVector(chi.unscale(norm))))
}

/// Multiplies by a unit phase so that the first component with modulus
/// above [`EPSILON`] becomes real and positive.
pub fn normalize_phase(chi: &StateVector) -> StateVector {
    let Some(lead) = chi.0.iter().find(|z| z.norm() > EPSILON) else {
        return chi.clone();
    };
    let phase = lead.conj() / lead.norm();
    let mut v = chi.0 * phase;
    // Exact zero imaginary part on the leading component.
    let k = chi.0.iter().position(|z| z.norm() > EPSILON).unwrap_or(0);
    v[k] = c(v[k].re, 0.0);
    StateVector(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn assert_vec_eq(a: &Vec3, b: &Vec3, tol: f64) {
        assert!((a - b).norm() < tol, "{a:?} != {b:?}");
    }

    #[test]
    fn inner_examples() {
        let e1 = StateVector::basis(0);
        let e2 = StateVector::basis(1);
        assert_eq!(inner(e1.as_vec(), e1.as_vec()), c(1.0, 0.0));
        assert_eq!(inner(e1.as_vec(), e2.as_vec()), c(0.0, 0.0));
        let u = StateVector::real(1.0, 1.0, 1.0).unwrap();
        let z = inner(u.as_vec(), e1.as_vec());
        assert_abs_diff_eq!(z.re, 1.0 / 3f64.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(z.im, 0.0);
    }

    #[test]
    fn inner_is_conjugate_symmetric() {
        let a = Vec3::new(c(0.3, 0.1), c(-0.2, 0.7), c(0.5, -0.4));
        let b = Vec3::new(c(0.9, -0.3), c(0.0, 0.2), c(-0.1, 0.6));
        assert_eq!(inner(&a, &b), inner(&b, &a).conj());
    }

    #[test]
    fn complement_of_diagonal_and_first_axis() {
        let phi = StateVector::real(1.0, 1.0, 1.0).unwrap();
        let chi = orthogonal_complement_vector(&phi, &StateVector::basis(0)).unwrap();
        let s = 0.5f64.sqrt();
        assert_vec_eq(chi.as_vec(), &Vec3::new(c(0.0, 0.0), c(s, 0.0), c(-s, 0.0)), 1e-15);
    }

    #[test]
    fn complement_of_two_axes_is_third() {
        let chi =
            orthogonal_complement_vector(&StateVector::basis(0), &StateVector::basis(1)).unwrap();
        assert_eq!(chi, StateVector::basis(2));
    }

    #[test]
    fn complement_of_circular_and_second_axis() {
        let phi = StateVector::from_components([c(1.0, 0.0), c(0.0, 1.0), c(0.0, 0.0)]).unwrap();
        let chi = orthogonal_complement_vector(&phi, &StateVector::basis(1)).unwrap();
        assert_vec_eq(chi.as_vec(), StateVector::basis(2).as_vec(), 1e-15);
    }

    #[test]
    fn complement_rejects_same_ray() {
        let phi = StateVector::real(1.0, 2.0, 3.0).unwrap();
        let rotated = StateVector::new(phi.as_vec() * c(0.0, 1.0)).unwrap();
        assert!(matches!(
            orthogonal_complement_vector(&phi, &rotated),
            Err(HilbertError::DegenerateInput(_))
        ));
    }

    #[test]
    fn phase_normalization_examples() {
        let v = StateVector::from_components([c(0.0, 1.0), c(0.0, 0.0), c(0.0, 0.0)]).unwrap();
        assert_eq!(normalize_phase(&v), StateVector::basis(0));
        let v = StateVector::from_components([c(0.0, 0.0), c(0.0, 0.0), c(0.0, 1.0)]).unwrap();
        assert_eq!(normalize_phase(&v), StateVector::basis(2));

        let s = 0.5f64.sqrt();
        let phase = c(s, s);
        let v = StateVector::new(Vec3::new(c(0.0, 0.0), phase * s, -phase * s)).unwrap();
        let n = normalize_phase(&v);
        assert_vec_eq(n.as_vec(), &Vec3::new(c(0.0, 0.0), c(s, 0.0), c(-s, 0.0)), 1e-15);
        assert_eq!(n.as_vec()[1].im, 0.0);
    }

    #[test]
    fn zero_vector_is_rejected() {
        assert!(StateVector::new(Vec3::zeros()).is_err());
    }

    #[test]
    fn unit_vectors_are_stored_verbatim() {
        let v = Vec3::new(c(0.6, 0.0), c(0.0, 0.8), c(0.0, 0.0));
        assert_eq!(StateVector::new(v).unwrap().into_vec(), v);
    }
}
