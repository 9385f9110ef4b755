use serde::{Deserialize, Serialize};

use super::LabError;
use crate::engine::{RuleSet, Variant};
use crate::hilbert::{DensityOperator, Factor, Mat3, Projector, EPSILON};
use crate::strategies::{HostModel, HostStrategy, NotepadPolicy, PlayerStrategy};
use crate::RandomStream;

/// State of the prize given the player's door `p` and the opened door `q`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionalModel {
    pub p: Projector,
    pub q: Projector,
    pub rho_q: DensityOperator,
}

impl ConditionalModel {
    /// Rejects a state that gives the opened door positive weight.
    pub fn new(p: Projector, q: Projector, rho_q: DensityOperator) -> Result<Self, LabError> {
        let on_door = rho_q.expectation(&q);
        if on_door > EPSILON {
            return Err(LabError::Config(format!(
                "conditional state puts weight {on_door:.3e} on the opened door"
            )));
        }
        Ok(Self { p, q, rho_q })
    }

    /// The unitarily invariant host: `p/3 + 2(1 − p − q)/3`.
    pub fn haar(p: Projector, q: Projector) -> Result<Self, LabError> {
        if p.overlap(&q) > EPSILON {
            return Err(LabError::Config("p and q are not orthogonal".into()));
        }
        let rest = Mat3::identity() - p.matrix() - q.matrix();
        let rho = DensityOperator::new(p.matrix().scale(1.0 / 3.0) + rest.scale(2.0 / 3.0))
            .map_err(|e| LabError::Config(e.to_string()))?;
        Self::new(p, q, rho)
    }

    /// `tr(ρ_q p′)`.
    pub fn win_probability(&self, p_prime: &Projector) -> f64 {
        self.rho_q.expectation(p_prime)
    }
}

/// `(1/3) sin²θ + (2/3) cos²θ`: the angle player against a unitarily
/// invariant host.
pub fn sweep_prediction(theta: f64) -> f64 {
    let (s, c) = theta.sin_cos();
    s * s / 3.0 + 2.0 * c * c / 3.0
}

/// Hosts for which the prize, given `p` and `q`, is `p/3 + 2(1−p−q)/3`.
fn is_haar_like(host: &HostStrategy) -> bool {
    matches!(
        host,
        HostStrategy::Haar
            | HostStrategy::Entangled {
                policy: NotepadPolicy::TransposeOfPlayerTriple
            }
    )
}

/// Closed-form win probability for the catalogued combinations; `None`
/// where no closed form is known.
pub fn analytic_value(host: &HostStrategy, player: &PlayerStrategy, rules: &RuleSet) -> Option<f64> {
    let exact = rules.announce_precision_digits.is_none();
    match rules.variant {
        Variant::Strict => strict_value(host, player, exact),
        Variant::CompleteVn => matches!(host, HostStrategy::CompleteVn { .. }).then_some(0.5),
        Variant::TouchAllowed => host.is_legal_under_strict().then_some(0.5),
        Variant::RevealWins => match (host, player) {
            // A revealed prize counts as a win, and otherwise switching
            // wins with the prize's weight off the first door.
            (HostStrategy::IgnoreNotepad, PlayerStrategy::Switch { phi: None }) => Some(2.0 / 3.0),
            (h, _) if h.is_legal_under_strict() => strict_value(h, player, exact),
            _ => None,
        },
        Variant::TripleChoice => match (host, player) {
            (
                HostStrategy::Entangled {
                    policy: NotepadPolicy::TransposeOfPlayerTriple,
                },
                PlayerStrategy::Switch { phi: None },
            ) => Some(2.0 / 3.0),
            (
                HostStrategy::Entangled {
                    policy: NotepadPolicy::TransposeOfPlayerTriple,
                },
                PlayerStrategy::Stick { phi: None },
            ) => Some(1.0 / 3.0),
            _ => None,
        },
        Variant::RestartOnReveal | Variant::OpenPlayersDoor => None,
    }
}

fn strict_value(host: &HostStrategy, player: &PlayerStrategy, exact: bool) -> Option<f64> {
    if !host.is_legal_under_strict() {
        return None;
    }
    // Against a legal host the prize is never behind q, so
    // P(stick wins) = tr(ρ̄ p) and P(switch wins) = 1 − tr(ρ̄ p).
    let stick = |phi: &Option<crate::hilbert::StateVector>| match phi {
        None => Some(1.0 / 3.0),
        Some(phi) => host.mean_density().map(|rho| rho.expectation(&phi.projector())),
    };
    match player {
        PlayerStrategy::Stick { phi } => stick(phi),
        PlayerStrategy::Switch { phi } if exact => stick(phi).map(|s| 1.0 - s),
        PlayerStrategy::AngleSweep { theta, phi: None } if exact && is_haar_like(host) => {
            Some(sweep_prediction(*theta))
        }
        PlayerStrategy::BayesOptimal {
            model: HostModel::Haar,
            phi: None,
        } if exact && is_haar_like(host) => Some(2.0 / 3.0),
        PlayerStrategy::FiniteSetCheat { known, phi, tolerance } if exact => {
            let catalog = host.catalog()?;
            let same_catalog = catalog.len() == known.len()
                && catalog
                    .vectors()
                    .iter()
                    .zip(known)
                    .all(|(a, b)| a.same_ray(b, 1e-15));
            let spans_avoided = match phi {
                Some(phi) => crate::strategies::avoids_all_spans(phi, known),
                None => known.len() <= crate::strategies::SPAN_TEST_LIMIT,
            };
            (same_catalog && spans_avoided && *tolerance <= crate::strategies::DEFAULT_CHEAT_TOLERANCE)
                .then_some(1.0)
        }
        PlayerStrategy::RealCheat if exact && matches!(host, HostStrategy::RealVector) => Some(1.0),
        _ => None,
    }
}

/// Average prize state over `n` preparations; computed exactly for
/// entangled hosts.
pub fn mean_density_estimate(host: &HostStrategy, n: usize, seed: u64) -> Result<DensityOperator, LabError> {
    if n == 0 {
        return Err(LabError::Config("n must be at least 1".into()));
    }
    let mut rng = RandomStream::new(seed, 0);
    if host.is_entangled() {
        let crate::engine::PrizeState::Joint(j) = host.prepare(&mut rng).prize else {
            unreachable!("entangled hosts prepare a joint state");
        };
        return Ok(j.reduced_state(Factor::Game));
    }
    let sum = (0..n).fold(Mat3::zeros(), |acc, _| {
        acc + host.prepare(&mut rng).prize.game_state().matrix()
    });
    DensityOperator::normalized(sum).map_err(|e| LabError::Config(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::StateVector;

    #[test]
    fn catalogued_values() {
        let strict = RuleSet::strict();
        let close = |v: Option<f64>, want: f64| (v.unwrap() - want).abs() < 1e-15;
        assert!(close(analytic_value(&HostStrategy::Haar, &PlayerStrategy::switch(), &strict), 2.0 / 3.0));
        assert!(close(analytic_value(&HostStrategy::Haar, &PlayerStrategy::stick(), &strict), 1.0 / 3.0));
        assert_eq!(
            analytic_value(&HostStrategy::RealVector, &PlayerStrategy::RealCheat, &strict),
            Some(1.0)
        );
        let vn = HostStrategy::CompleteVn {
            prize: StateVector::basis(0),
        };
        for player in [PlayerStrategy::stick(), PlayerStrategy::switch(), PlayerStrategy::RealCheat] {
            assert_eq!(analytic_value(&vn, &player, &RuleSet::new(Variant::CompleteVn)), Some(0.5));
        }
        assert_eq!(
            analytic_value(&HostStrategy::Haar, &PlayerStrategy::RealCheat, &strict),
            None
        );
        assert_eq!(
            analytic_value(&HostStrategy::RealVector, &PlayerStrategy::RealCheat, &strict.clone().with_digits(4)),
            None
        );
    }

    #[test]
    fn sweep_prediction_points() {
        use std::f64::consts::PI;
        assert!((sweep_prediction(0.0) - 2.0 / 3.0).abs() < 1e-15);
        assert!((sweep_prediction(PI / 2.0) - 1.0 / 3.0).abs() < 1e-15);
        assert!((sweep_prediction(PI / 4.0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn haar_conditional_model() {
        let p = StateVector::basis(0).projector();
        let q = StateVector::basis(1).projector();
        let model = ConditionalModel::haar(p.clone(), q.clone()).unwrap();
        assert!((model.win_probability(&p) - 1.0 / 3.0).abs() < 1e-15);
        assert!((model.win_probability(&StateVector::basis(2).projector()) - 2.0 / 3.0).abs() < 1e-15);
        assert!(model.win_probability(&q).abs() < 1e-15);
        let bad = DensityOperator::maximally_mixed();
        assert!(ConditionalModel::new(p, q, bad).is_err());
    }

    #[test]
    fn entangled_mean_density_is_exact() {
        let rho = mean_density_estimate(&HostStrategy::entangled_transpose(), 1, 0).unwrap();
        assert!(rho.distance(&DensityOperator::maximally_mixed()) < 1e-12);
    }

    #[test]
    fn fixed_vector_mean_density() {
        let psi = StateVector::real(1.0, 2.0, 2.0).unwrap();
        let host = HostStrategy::CompleteVn { prize: psi.clone() };
        let rho = mean_density_estimate(&host, 10, 0).unwrap();
        assert!(rho.distance(&DensityOperator::pure(&psi)) < 1e-15);
    }
}
