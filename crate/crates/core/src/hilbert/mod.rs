//! Complex linear algebra on the 3-dimensional game space and on the
//! 9-dimensional space game ⊗ notepad.
//!
//! Everything here is a pure function of its inputs plus an explicit random
//! stream. Vectors and operators are fixed-size `nalgebra` values over
//! [`Complex64`].

mod joint;
mod measure;
mod operator;
mod povm;
mod random;
mod state;

pub use joint::{maximally_entangled, Factor, JointState, Vec9};
pub use measure::{lueders_measure, lueders_measure_mixed};
pub use operator::{
    hermitian_eigen, is_hermitian, is_idempotent, max_abs, psd_sqrt, transpose_op,
    DensityOperator, Projector,
};
pub use povm::{Effect, Povm};
pub use random::{haar_random_in_complement, haar_random_unit, random_real_unit};
pub use state::{
    cross, inner, normalize_phase, orthogonal_complement_vector, StateVector,
};

pub use num_complex::Complex64;

/// Column vector in the game space.
pub type Vec3 = nalgebra::Vector3<Complex64>;
/// Operator on the game space (or, via the shared basis labels, on the notepad).
pub type Mat3 = nalgebra::Matrix3<Complex64>;

/// Tolerance for orthogonality, normalization and idempotence checks.
pub const EPSILON: f64 = 1e-9;

/// Errors raised by the linear-algebra layer.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum HilbertError {
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("vector cannot be normalized (norm {0})")]
    ZeroVector(f64),
    #[error("invalid projector: {0}")]
    InvalidProjector(String),
    #[error("invalid density operator: {0}")]
    InvalidDensity(String),
    #[error("invalid POVM: {0}")]
    InvalidPovm(String),
}

pub(crate) fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Identity on the game space.
pub fn identity() -> Mat3 {
    Mat3::identity()
}
