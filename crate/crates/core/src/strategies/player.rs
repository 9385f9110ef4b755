use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{door_avoiding, HostModel, HostStrategy, StrategyError};
use crate::engine::{Announcement, DegeneracyPolicy, FirstChoice, Variant};
use crate::hilbert::{
    haar_random_in_complement, haar_random_unit, inner, orthogonal_complement_vector, c, Mat3,
    StateVector, Vec3,
};

/// Default bound on `|⟨χ|Ψ_α⟩|` for a catalog vector to count as orthogonal
/// to the announced door.
pub const DEFAULT_CHEAT_TOLERANCE: f64 = 1e-6;

/// Span-test threshold on `|det[Φ, Ψ_α, Ψ_β]|`.
const SPAN_THRESHOLD: f64 = 1e-6;

/// Beyond this catalog size the pairwise span test is skipped: it is
/// quadratic, and a Haar-random first choice avoids every span with
/// probability one.
pub(crate) const SPAN_TEST_LIMIT: usize = 4096;

const SETUP_TRIES: usize = 1000;

fn default_tolerance() -> f64 {
    DEFAULT_CHEAT_TOLERANCE
}

/// Player strategy. Serialized with a `kind` tag. Where `phi` is absent
/// the first choice is Haar-random each game.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PlayerStrategy {
    /// Final door `p′ = p`.
    Stick {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        phi: Option<StateVector>,
    },
    /// Final door `p′ = 1 − p − q`.
    Switch {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        phi: Option<StateVector>,
    },
    /// Knows the host's finite catalog and picks the unique catalog vector
    /// orthogonal to the announced door.
    FiniteSetCheat {
        known: Vec<StateVector>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        phi: Option<StateVector>,
        #[serde(default = "default_tolerance")]
        tolerance: f64,
    },
    /// Against real prize vectors: reads the prize off the announced door.
    RealCheat,
    /// `cos θ · (switch) + sin θ · (stick)`.
    AngleSweep {
        theta: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        phi: Option<StateVector>,
    },
    /// Top eigenvector of the modeled posterior restricted to the closed doors.
    BayesOptimal {
        model: HostModel,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        phi: Option<StateVector>,
    },
}

/// What the player sees at stage 4.
#[derive(Debug, Clone, Copy)]
pub struct FinalView<'a> {
    pub first: Option<&'a FirstChoice>,
    pub announced: &'a Announcement,
}

/// The final door and, if the strategy could not apply, why it fell back to switching.
#[derive(Debug, Clone, PartialEq)]
pub struct FinalDecision {
    pub door: StateVector,
    pub fallback: Option<StrategyError>,
}

impl PlayerStrategy {
    pub fn stick() -> Self {
        PlayerStrategy::Stick { phi: None }
    }

    pub fn switch() -> Self {
        PlayerStrategy::Switch { phi: None }
    }

    pub fn angle(theta: f64) -> Self {
        PlayerStrategy::AngleSweep { theta, phi: None }
    }

    /// A finite-set cheat against `host`, which must expose a catalog. The
    /// first choice is fixed once here, so the span test runs only once.
    pub fn finite_cheat_against<R: Rng + ?Sized>(
        host: &HostStrategy,
        rng: &mut R,
    ) -> Result<Self, StrategyError> {
        let catalog = host
            .catalog()
            .ok_or_else(|| StrategyError::Config(format!("host {} has no finite catalog", host.label())))?;
        let known = catalog.vectors().to_vec();
        let phi = cheat_first_choice(&known, rng)?;
        Ok(PlayerStrategy::FiniteSetCheat {
            known,
            phi: Some(phi),
            tolerance: DEFAULT_CHEAT_TOLERANCE,
        })
    }

    pub fn bayes_against(host: &HostStrategy) -> Self {
        PlayerStrategy::BayesOptimal {
            model: HostModel::of(host),
            phi: None,
        }
    }

    pub fn label(&self) -> String {
        match self {
            PlayerStrategy::Stick { .. } => "stick".into(),
            PlayerStrategy::Switch { .. } => "switch".into(),
            PlayerStrategy::FiniteSetCheat { known, .. } => format!("cheat-finite:{}", known.len()),
            PlayerStrategy::RealCheat => "cheat-real".into(),
            PlayerStrategy::AngleSweep { theta, .. } => format!("angle:{theta}"),
            PlayerStrategy::BayesOptimal { model, .. } => format!("bayes:{}", model.label()),
        }
    }

    pub fn validate(&self) -> Result<(), StrategyError> {
        match self {
            PlayerStrategy::FiniteSetCheat { known, tolerance, .. } => {
                if known.is_empty() {
                    return Err(StrategyError::Config("finite cheat needs a catalog".into()));
                }
                if !(*tolerance > 0.0) {
                    return Err(StrategyError::Config("cheat tolerance must be positive".into()));
                }
                Ok(())
            }
            PlayerStrategy::AngleSweep { theta, .. } if !theta.is_finite() => {
                Err(StrategyError::Config("angle must be finite".into()))
            }
            _ => Ok(()),
        }
    }

    /// Stage 2. Under `triple_choice` the first vector is completed to an
    /// orthonormal triple.
    pub fn player_first<R: Rng + ?Sized>(
        &self,
        variant: Variant,
        rng: &mut R,
    ) -> Result<FirstChoice, StrategyError> {
        let phi = match self {
            PlayerStrategy::Stick { phi }
            | PlayerStrategy::Switch { phi }
            | PlayerStrategy::AngleSweep { phi, .. }
            | PlayerStrategy::BayesOptimal { phi, .. } => {
                phi.clone().unwrap_or_else(|| haar_random_unit(rng))
            }
            PlayerStrategy::FiniteSetCheat { known, phi, .. } => match phi {
                Some(phi) => phi.clone(),
                None => cheat_first_choice(known, rng)?,
            },
            PlayerStrategy::RealCheat => real_cheat_first_choice(),
        };
        Ok(if variant == Variant::TripleChoice {
            let triple = complete_to_triple(&phi, rng).map(|v| v.projector());
            FirstChoice::Triple(triple)
        } else {
            FirstChoice::from_state(&phi)
        })
    }

    /// Stage 4, strictly: errors when the strategy cannot apply.
    pub fn final_choice<R: Rng + ?Sized>(
        &self,
        view: FinalView<'_>,
        rng: &mut R,
    ) -> Result<StateVector, StrategyError> {
        let chi = view.announced.door();
        match self {
            PlayerStrategy::Stick { .. } => Ok(match view.first {
                Some(f) => f.phi().clone(),
                None => haar_random_in_complement(&chi, rng),
            }),
            PlayerStrategy::Switch { .. } => Ok(switch_direction(view.first, &chi, rng)),
            PlayerStrategy::AngleSweep { theta, .. } => {
                let s = switch_direction(view.first, &chi, rng);
                let Some(first) = view.first else {
                    return Ok(s);
                };
                let v = s.as_vec().scale(theta.cos()) + first.phi().as_vec().scale(theta.sin());
                Ok(StateVector::new(v)?)
            }
            PlayerStrategy::FiniteSetCheat { known, tolerance, .. } => {
                let chi_v = view.announced.chi;
                let mut candidates = known
                    .iter()
                    .filter(|psi| inner(&chi_v, psi.as_vec()).norm() < *tolerance);
                match (candidates.next(), candidates.next()) {
                    (Some(psi), None) => project_off(psi, &chi),
                    (first, second) => Err(StrategyError::CheatAmbiguous {
                        candidates: first.is_some() as usize
                            + second.is_some() as usize
                            + candidates.count(),
                    }),
                }
            }
            PlayerStrategy::RealCheat => {
                let psi = real_cheat_reconstruction(&chi)?;
                project_off(&psi, &chi)
            }
            PlayerStrategy::BayesOptimal { model, .. } => {
                let rho = model
                    .posterior(view.first.map(|f| f.phi()), &chi, rng)
                    .ok_or(StrategyError::NoPosterior)?;
                let rest = Mat3::identity() - chi.projector().matrix();
                let restricted = rest * rho.matrix() * rest;
                let top = crate::hilbert::DensityOperator::normalized(restricted)
                    .map_err(|_| StrategyError::NoPosterior)?
                    .top_eigenvector();
                project_off(&top, &chi)
            }
        }
    }

    /// Stage 4 with the documented fallback: a cheat or model that cannot
    /// apply switches instead, and the reason is reported.
    pub fn decide<R: Rng + ?Sized>(&self, view: FinalView<'_>, rng: &mut R) -> FinalDecision {
        match self.final_choice(view, rng) {
            Ok(door) => FinalDecision { door, fallback: None },
            Err(e) => FinalDecision {
                door: switch_direction(view.first, &view.announced.door(), rng),
                fallback: Some(e),
            },
        }
    }
}

/// The ray orthogonal to the first choice and to the announced door; with
/// no first choice, a random ray orthogonal to the door.
fn switch_direction<R: Rng + ?Sized>(
    first: Option<&FirstChoice>,
    chi: &StateVector,
    rng: &mut R,
) -> StateVector {
    match first {
        Some(f) => orthogonal_complement_vector(f.phi(), chi)
            .unwrap_or_else(|_| door_avoiding(chi, DegeneracyPolicy::Random, rng)),
        None => haar_random_in_complement(chi, rng),
    }
}

/// `v` with its component along `chi` removed, renormalized.
pub fn project_off(v: &StateVector, chi: &StateVector) -> Result<StateVector, StrategyError> {
    let (v, chi) = (v.as_vec(), chi.as_vec());
    Ok(StateVector::new(v - chi * inner(chi, v))?)
}

/// Completes `phi` to an orthonormal triple `(phi, a, b)` with `a` uniformly random.
pub fn complete_to_triple<R: Rng + ?Sized>(phi: &StateVector, rng: &mut R) -> [StateVector; 3] {
    let a = haar_random_in_complement(phi, rng);
    let b = orthogonal_complement_vector(phi, &a).expect("a is orthogonal to phi");
    [phi.clone(), a, b]
}

/// `(1, i, 0)/√2`: real and imaginary parts are linearly independent.
fn real_cheat_first_choice() -> StateVector {
    StateVector::from_components([c(1.0, 0.0), c(0.0, 1.0), c(0.0, 0.0)]).expect("nonzero")
}

/// Recovers a real prize vector from a door announced against `(1, i, 0)/√2`:
/// after fixing the phase so `χ₁` is real, the prize is `(−Re χ₃, Im χ₃, χ₁)`.
pub fn real_cheat_reconstruction(chi: &StateVector) -> Result<StateVector, StrategyError> {
    let [c1, _, c3] = chi.components();
    if c1.norm() < DEFAULT_CHEAT_TOLERANCE {
        return Err(StrategyError::CheatDegenerate(c1.norm()));
    }
    let phase = c1.conj() / c1.norm();
    let (c1, c3) = (c1 * phase, c3 * phase);
    Ok(StateVector::new(Vec3::new(c(-c3.re, 0.0), c(c3.im, 0.0), c(c1.re, 0.0)))?)
}

/// Haar-random first choice outside every plane spanned by two catalog vectors.
fn cheat_first_choice<R: Rng + ?Sized>(
    known: &[StateVector],
    rng: &mut R,
) -> Result<StateVector, StrategyError> {
    if known.len() > SPAN_TEST_LIMIT {
        return Ok(haar_random_unit(rng));
    }
    for _ in 0..SETUP_TRIES {
        let phi = haar_random_unit(rng);
        if avoids_all_spans(&phi, known) {
            return Ok(phi);
        }
    }
    Err(StrategyError::CheatSetupFailed(SETUP_TRIES))
}

pub(crate) fn avoids_all_spans(phi: &StateVector, known: &[StateVector]) -> bool {
    known.iter().enumerate().all(|(i, a)| {
        known[i + 1..].iter().all(|b| {
            let m = Mat3::from_columns(&[*phi.as_vec(), *a.as_vec(), *b.as_vec()]);
            m.determinant().norm() > SPAN_THRESHOLD
        })
    })
}
