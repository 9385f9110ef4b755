use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{c, Complex64, DensityOperator, HilbertError, Mat3, Povm, Projector, StateVector};
use crate::wire::{self, ComplexPair};

/// Vector in game ⊗ notepad, component `(k, ℓ)` stored at `3k + ℓ`.
pub type Vec9 = nalgebra::SVector<Complex64, 9>;

/// Which tensor factor an operator acts on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Factor {
    /// The game space `H`.
    Game,
    /// The notepad `N`.
    Notepad,
}

/// Unit vector in the 9-dimensional joint space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<ComplexPair>", into = "Vec<ComplexPair>")]
pub struct JointState(Vec9);

impl TryFrom<Vec<ComplexPair>> for JointState {
    type Error = HilbertError;
    fn try_from(pairs: Vec<ComplexPair>) -> Result<Self, Self::Error> {
        if pairs.len() != 9 {
            return Err(HilbertError::ZeroVector(0.0));
        }
        JointState::new(Vec9::from_iterator(pairs.into_iter().map(wire::from_pair)))
    }
}

impl From<JointState> for Vec<ComplexPair> {
    fn from(j: JointState) -> Self {
        j.0.iter().copied().map(wire::to_pair).collect()
    }
}

/// `Ω = (1/√3) Σ_k |kk⟩`.
pub fn maximally_entangled() -> JointState {
    let amp = c(1.0 / 3f64.sqrt(), 0.0);
    let mut v = Vec9::zeros();
    for k in 0..3 {
        v[4 * k] = amp;
    }
    JointState(v)
}

impl JointState {
    pub fn new(v: Vec9) -> Result<Self, HilbertError> {
        let norm = v.norm();
        if !norm.is_finite() || norm <= f64::MIN_POSITIVE {
            return Err(HilbertError::ZeroVector(norm));
        }
        Ok(Self(v.unscale(norm)))
    }

    /// `ψ ⊗ φ`.
    pub fn product(game: &StateVector, notepad: &StateVector) -> Self {
        let (g, n) = (game.as_vec(), notepad.as_vec());
        Self(Vec9::from_fn(|i, _| g[i / 3] * n[i % 3]))
    }

    pub fn as_vec(&self) -> &Vec9 {
        &self.0
    }

    pub fn component(&self, k: usize, l: usize) -> Complex64 {
        self.0[3 * k + l]
    }

    /// `(X ⊗ 1)v` or `(1 ⊗ X)v`, unnormalized.
    pub fn apply_local(&self, x: &Mat3, factor: Factor) -> Vec9 {
        apply_local(&self.0, x, factor)
    }

    /// `⟨v| X ⊗ 1 |v⟩` or `⟨v| 1 ⊗ X |v⟩`.
    pub fn local_expectation(&self, x: &Mat3, factor: Factor) -> Complex64 {
        self.0.dotc(&self.apply_local(x, factor))
    }

    /// Partial trace over the complementary factor.
    pub fn reduced_state(&self, factor: Factor) -> DensityOperator {
        DensityOperator::from_matrix_unchecked(reduced_matrix(&self.0, factor))
    }

    /// Outcome probabilities `⟨v|(1 ⊗ F_x)|v⟩` of a notepad POVM.
    pub fn notepad_probabilities(&self, povm: &Povm) -> Vec<f64> {
        povm.effects()
            .iter()
            .map(|e| self.local_expectation(&e.operator, Factor::Notepad).re.max(0.0))
            .collect()
    }

    /// Samples a POVM outcome on the notepad; the post-state is
    /// `(1 ⊗ √F_x)v`, normalized.
    pub fn measure_notepad<R: Rng + ?Sized>(&self, povm: &Povm, rng: &mut R) -> (usize, JointState) {
        let probs = self.notepad_probabilities(povm);
        let total: f64 = probs.iter().sum();
        let mut u = rng.random::<f64>() * total;
        let mut outcome = probs.len() - 1;
        for (i, &p) in probs.iter().enumerate() {
            if p > 0.0 && u < p {
                outcome = i;
                break;
            }
            u -= p;
        }
        // Rounding can leave u past the last nonzero branch; never pick a zero branch.
        if probs[outcome] <= 0.0 {
            outcome = probs
                .iter()
                .rposition(|&p| p > 0.0)
                .expect("a valid POVM has a positive-probability outcome");
        }
        let image = self.apply_local(&povm.sqrt_effect(outcome), Factor::Notepad);
        (outcome, JointState::new(image).unwrap_or_else(|_| self.clone()))
    }

    /// Probability that the game-space door `p` responds.
    pub fn game_probability(&self, p: &Projector) -> f64 {
        self.local_expectation(p.matrix(), Factor::Game).re.clamp(0.0, 1.0)
    }

    /// Lüders measurement `{q ⊗ 1, (1 − q) ⊗ 1}` on the game factor.
    pub fn lueders_game<R: Rng + ?Sized>(&self, q: &Projector, rng: &mut R) -> (bool, JointState) {
        let prob_yes = self.game_probability(q);
        let hit = rng.random::<f64>() < prob_yes;
        let branch = if hit {
            *q.matrix()
        } else {
            Mat3::identity() - q.matrix()
        };
        let image = self.apply_local(&branch, Factor::Game);
        (hit, JointState::new(image).unwrap_or_else(|_| self.clone()))
    }
}

pub(crate) fn apply_local(v: &Vec9, x: &Mat3, factor: Factor) -> Vec9 {
    Vec9::from_fn(|i, _| {
        let (k, l) = (i / 3, i % 3);
        (0..3)
            .map(|m| match factor {
                Factor::Game => x[(k, m)] * v[3 * m + l],
                Factor::Notepad => x[(l, m)] * v[3 * k + m],
            })
            .sum()
    })
}

pub(crate) fn reduced_matrix(v: &Vec9, factor: Factor) -> Mat3 {
    Mat3::from_fn(|a, b| {
        (0..3)
            .map(|m| match factor {
                Factor::Game => v[3 * a + m] * v[3 * b + m].conj(),
                Factor::Notepad => v[3 * m + a] * v[3 * m + b].conj(),
            })
            .sum()
    })
}
