use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::{inner, normalize_phase, HilbertError, Mat3, StateVector, Vec3, EPSILON};
use crate::wire;

/// Largest entrywise modulus.
pub fn max_abs(m: &Mat3) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn is_hermitian(m: &Mat3, tol: f64) -> bool {
    max_abs(&(m - m.adjoint())) <= tol
}

pub fn is_idempotent(m: &Mat3, tol: f64) -> bool {
    max_abs(&(m * m - m)) <= tol
}

/// Plain transpose in the fixed basis: `(Xᵀ)_{kℓ} = X_{ℓk}`, no conjugation.
pub fn transpose_op(x: &Mat3) -> Mat3 {
    x.transpose()
}

/// Eigen-decomposition of a Hermitian operator, eigenvalues ascending.
pub fn hermitian_eigen(m: &Mat3) -> ([f64; 3], [Vec3; 3]) {
    let hermitian = (m + m.adjoint()).scale(0.5);
    let eig = nalgebra::SymmetricEigen::new(hermitian);
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.map(|i| eig.eigenvalues[i]);
    let vectors = order.map(|i| eig.eigenvectors.column(i).into_owned());
    (values, vectors)
}

/// Square root of a positive semidefinite operator; negative rounding
/// residue in the spectrum is clipped to zero.
pub fn psd_sqrt(m: &Mat3) -> Mat3 {
    let (values, vectors) = hermitian_eigen(m);
    values
        .iter()
        .zip(vectors.iter())
        .fold(Mat3::zeros(), |acc, (&lambda, v)| {
            acc + (v * v.adjoint()).scale(lambda.max(0.0).sqrt())
        })
}

/// Rank-one orthogonal projection `|χ⟩⟨χ|` on the game space: a door.
///
/// The generating unit vector is kept alongside the matrix so that doors can
/// be announced and logged as vectors without re-extracting them.
#[derive(Debug, Clone)]
pub struct Projector {
    ket: StateVector,
    matrix: Mat3,
}

impl Projector {
    pub fn from_state(state: &StateVector) -> Self {
        let v = state.as_vec();
        Self {
            ket: state.clone(),
            matrix: v * v.adjoint(),
        }
    }

    /// Validates a matrix as a rank-one projector: Hermitian, idempotent,
    /// trace one, all within [`EPSILON`].
    pub fn from_matrix(m: Mat3) -> Result<Self, HilbertError> {
        if !is_hermitian(&m, EPSILON) {
            return Err(HilbertError::InvalidProjector("not Hermitian".into()));
        }
        if !is_idempotent(&m, EPSILON) {
            return Err(HilbertError::InvalidProjector("not idempotent".into()));
        }
        let trace = m.trace();
        if (trace.re - 1.0).abs() > EPSILON || trace.im.abs() > EPSILON {
            return Err(HilbertError::InvalidProjector(format!(
                "trace {:.6} is not one",
                trace.re
            )));
        }
        let column = (0..3)
            .map(|k| m.column(k).into_owned())
            .max_by(|a, b| a.norm_squared().total_cmp(&b.norm_squared()))
            .expect("three columns");
        let ket = normalize_phase(&StateVector::new(column)?);
        Ok(Self { ket, matrix: m })
    }

    pub fn ket(&self) -> &StateVector {
        &self.ket
    }

    pub fn matrix(&self) -> &Mat3 {
        &self.matrix
    }

    /// `tr(self · other)`.
    pub fn overlap(&self, other: &Projector) -> f64 {
        self.ket.overlap(&other.ket)
    }

    /// `⟨ψ|p|ψ⟩` for a pure state.
    pub fn expectation(&self, state: &StateVector) -> f64 {
        inner(self.ket.as_vec(), state.as_vec()).norm_sqr()
    }

    /// Entrywise distance between the two projection matrices.
    pub fn distance(&self, other: &Projector) -> f64 {
        max_abs(&(self.matrix - other.matrix))
    }

    /// `pᵀ`, the projector onto the conjugated vector.
    pub fn transpose(&self) -> Projector {
        Projector::from_state(&self.ket.conj())
    }
}

impl PartialEq for Projector {
    fn eq(&self, other: &Self) -> bool {
        self.matrix == other.matrix
    }
}

impl Serialize for Projector {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.ket.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Projector {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        Ok(Projector::from_state(&StateVector::deserialize(deserializer)?))
    }
}

/// Positive, unit-trace operator on the game space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawDensity", into = "RawDensity")]
pub struct DensityOperator(Mat3);

#[derive(Serialize, Deserialize)]
struct RawDensity(#[serde(with = "wire::mat3")] Mat3);

impl TryFrom<RawDensity> for DensityOperator {
    type Error = HilbertError;
    fn try_from(raw: RawDensity) -> Result<Self, Self::Error> {
        DensityOperator::new(raw.0)
    }
}

impl From<DensityOperator> for RawDensity {
    fn from(rho: DensityOperator) -> Self {
        RawDensity(rho.0)
    }
}

impl DensityOperator {
    pub fn new(m: Mat3) -> Result<Self, HilbertError> {
        if !is_hermitian(&m, EPSILON) {
            return Err(HilbertError::InvalidDensity("not Hermitian".into()));
        }
        let trace = m.trace();
        if (trace.re - 1.0).abs() > EPSILON || trace.im.abs() > EPSILON {
            return Err(HilbertError::InvalidDensity(format!("trace {:.6}", trace.re)));
        }
        let (values, _) = hermitian_eigen(&m);
        if values[0] < -EPSILON {
            return Err(HilbertError::InvalidDensity(format!(
                "negative eigenvalue {:.3e}",
                values[0]
            )));
        }
        Ok(Self(m))
    }

    /// Rescales a positive operator with nonzero trace to unit trace.
    pub fn normalized(m: Mat3) -> Result<Self, HilbertError> {
        let trace = m.trace().re;
        if trace <= f64::MIN_POSITIVE {
            return Err(HilbertError::InvalidDensity("zero trace".into()));
        }
        Self::new(m.unscale(trace))
    }

    pub(crate) fn from_matrix_unchecked(m: Mat3) -> Self {
        Self(m)
    }

    pub fn pure(state: &StateVector) -> Self {
        Self(*Projector::from_state(state).matrix())
    }

    /// `I/3`.
    pub fn maximally_mixed() -> Self {
        Self(Mat3::identity().scale(1.0 / 3.0))
    }

    pub fn matrix(&self) -> &Mat3 {
        &self.0
    }

    /// `tr(ρ p)`.
    pub fn expectation(&self, p: &Projector) -> f64 {
        let v = p.ket().as_vec();
        inner(v, &(self.0 * v)).re
    }

    pub fn trace(&self) -> f64 {
        self.0.trace().re
    }

    /// Unit eigenvector of the largest eigenvalue.
    pub fn top_eigenvector(&self) -> StateVector {
        let (_, vectors) = hermitian_eigen(&self.0);
        normalize_phase(&StateVector::new(vectors[2]).expect("eigenvectors are unit"))
    }

    pub fn distance(&self, other: &DensityOperator) -> f64 {
        max_abs(&(self.0 - other.0))
    }

    /// Mixture `Σ w_i ρ_i`; weights must sum to one.
    pub fn mixture(parts: &[(f64, &DensityOperator)]) -> Result<Self, HilbertError> {
        let m = parts
            .iter()
            .fold(Mat3::zeros(), |acc, (w, rho)| acc + rho.0.scale(*w));
        Self::new(m)
    }
}

#[cfg(test)]
pub(crate) fn outer(a: &Vec3, b: &Vec3) -> Mat3 {
    a * b.adjoint()
}

#[cfg(test)]
pub(crate) fn zero() -> super::Complex64 {
    super::c(0.0, 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::c;

    #[test]
    fn transpose_examples() {
        assert_eq!(transpose_op(&Mat3::identity()), Mat3::identity());
        let e1 = StateVector::basis(0);
        let e2 = StateVector::basis(1);
        let unit = outer(e1.as_vec(), e2.as_vec());
        assert_eq!(transpose_op(&unit), outer(e2.as_vec(), e1.as_vec()));

        let plus_i = StateVector::from_components([c(1.0, 0.0), c(0.0, 1.0), zero()]).unwrap();
        let minus_i = StateVector::from_components([c(1.0, 0.0), c(0.0, -1.0), zero()]).unwrap();
        let t = transpose_op(plus_i.projector().matrix());
        assert!(max_abs(&(t - minus_i.projector().matrix())) < 1e-15);
        assert!(plus_i.projector().transpose().distance(&minus_i.projector()) < 1e-15);
    }

    #[test]
    fn projector_validation() {
        let p = StateVector::real(1.0, 1.0, 1.0).unwrap().projector();
        let back = Projector::from_matrix(*p.matrix()).unwrap();
        assert!(back.distance(&p) < 1e-15);

        let trace_two = StateVector::basis(0).projector().matrix()
            + StateVector::basis(1).projector().matrix();
        assert!(matches!(
            Projector::from_matrix(trace_two),
            Err(HilbertError::InvalidProjector(_))
        ));
        let not_idempotent = Mat3::identity().scale(1.0 / 3.0);
        assert!(Projector::from_matrix(not_idempotent).is_err());
    }

    #[test]
    fn density_validation() {
        assert!(DensityOperator::new(Mat3::identity()).is_err());
        let mut m = Mat3::zeros();
        m[(0, 0)] = c(1.5, 0.0);
        m[(1, 1)] = c(-0.5, 0.0);
        assert!(DensityOperator::new(m).is_err());
        let rho = DensityOperator::maximally_mixed();
        assert!((rho.trace() - 1.0).abs() < 1e-15);
        assert!((rho.expectation(&StateVector::basis(1).projector()) - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn sqrt_of_scaled_projector() {
        let phi = StateVector::real(1.0, 2.0, 2.0).unwrap();
        let f = phi.projector().matrix().scale(3.0);
        let root = psd_sqrt(&f);
        assert!(max_abs(&(root - phi.projector().matrix().scale(3f64.sqrt()))) < 1e-12);
    }

    #[test]
    fn top_eigenvector_of_diagonal() {
        let mut m = Mat3::zeros();
        m[(0, 0)] = c(0.2, 0.0);
        m[(1, 1)] = c(0.1, 0.0);
        m[(2, 2)] = c(0.7, 0.0);
        let rho = DensityOperator::new(m).unwrap();
        assert!(rho.top_eigenvector().same_ray(&StateVector::basis(2), 1e-12));
    }
}
