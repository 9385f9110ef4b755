use serde::{Deserialize, Serialize};

use super::{hermitian_eigen, max_abs, psd_sqrt, HilbertError, Mat3, StateVector, EPSILON};
use crate::wire;

/// One labelled POVM effect `F_x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Effect {
    pub label: String,
    #[serde(with = "wire::mat3")]
    pub operator: Mat3,
}

impl Effect {
    pub fn new(label: impl Into<String>, operator: Mat3) -> Self {
        Self {
            label: label.into(),
            operator,
        }
    }

    /// `weight · |φ⟩⟨φ|`.
    pub fn rank_one(label: impl Into<String>, weight: f64, ray: &StateVector) -> Self {
        Self::new(label, ray.projector().matrix().scale(weight))
    }
}

/// Discrete positive operator valued measure: positive effects summing to
/// the identity. Square roots of the effects are cached for collapse.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "Vec<Effect>", into = "Vec<Effect>")]
pub struct Povm {
    effects: Vec<Effect>,
    roots: Vec<Mat3>,
}

impl TryFrom<Vec<Effect>> for Povm {
    type Error = HilbertError;
    fn try_from(effects: Vec<Effect>) -> Result<Self, Self::Error> {
        Povm::new(effects)
    }
}

impl From<Povm> for Vec<Effect> {
    fn from(p: Povm) -> Self {
        p.effects
    }
}

impl PartialEq for Povm {
    fn eq(&self, other: &Self) -> bool {
        self.effects == other.effects
    }
}

impl Povm {
    pub fn new(effects: Vec<Effect>) -> Result<Self, HilbertError> {
        if effects.is_empty() {
            return Err(HilbertError::InvalidPovm("no effects".into()));
        }
        let mut total = Mat3::zeros();
        for e in &effects {
            let (values, _) = hermitian_eigen(&e.operator);
            if max_abs(&(e.operator - e.operator.adjoint())) > EPSILON || values[0] < -EPSILON {
                return Err(HilbertError::InvalidPovm(format!(
                    "effect {:?} is not positive",
                    e.label
                )));
            }
            total += e.operator;
        }
        let defect = max_abs(&(total - Mat3::identity()));
        if defect > EPSILON {
            return Err(HilbertError::InvalidPovm(format!(
                "effects sum to identity only within {defect:.3e}"
            )));
        }
        let roots = effects.iter().map(|e| psd_sqrt(&e.operator)).collect();
        Ok(Self { effects, roots })
    }

    /// Von Neumann measurement along an orthonormal basis.
    pub fn projective(basis: &[StateVector; 3]) -> Self {
        let effects = basis
            .iter()
            .enumerate()
            .map(|(k, v)| Effect::rank_one(k.to_string(), 1.0, v))
            .collect();
        Self::new(effects).expect("orthonormal basis resolves the identity")
    }

    pub fn effects(&self) -> &[Effect] {
        &self.effects
    }

    pub fn len(&self) -> usize {
        self.effects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.effects.is_empty()
    }

    /// `√F_x`.
    pub fn sqrt_effect(&self, index: usize) -> Mat3 {
        self.roots[index]
    }
}
