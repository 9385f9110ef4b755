//! The referee.
//!
//! A [`GameSession`] walks through the four stages: preparation by the
//! host, the player's first door, the host opening a door, and the player's
//! final door. The engine performs every physical measurement itself; host
//! strategies only propose doors, so an illegal host is caught as a
//! [`EngineError::HostViolation`] instead of producing silently wrong
//! statistics.

mod session;
mod transcript;

use serde::{Deserialize, Serialize};

use crate::hilbert::{
    lueders_measure, lueders_measure_mixed, normalize_phase, DensityOperator, HilbertError,
    JointState, Mat3, Projector, StateVector, Vec3, EPSILON,
};
use crate::strategies::StrategyError;

pub use session::{replay, DoorOutcome, GameSession};
pub use transcript::{Round, Transcript};

/// Rule variant in force for a session.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    /// The host must open a door orthogonal to the player's and must not hit the prize.
    #[default]
    Strict,
    /// Hitting the prize at stage 3 hands it to the player.
    RevealWins,
    /// Hitting the prize at stage 3 restarts the game from preparation.
    RestartOnReveal,
    /// After opening, the host equalizes the prize over the two closed doors.
    TouchAllowed,
    /// Stage 2 is omitted; the host may open any door.
    OpenPlayersDoor,
    /// The host opens his door with a complete von Neumann measurement.
    CompleteVn,
    /// The player names a full orthogonal triple and the host must open one of the other two.
    TripleChoice,
}

impl Variant {
    pub const ALL: [Variant; 7] = [
        Variant::Strict,
        Variant::RevealWins,
        Variant::RestartOnReveal,
        Variant::TouchAllowed,
        Variant::OpenPlayersDoor,
        Variant::CompleteVn,
        Variant::TripleChoice,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Strict => "strict",
            Variant::RevealWins => "reveal_wins",
            Variant::RestartOnReveal => "restart_on_reveal",
            Variant::TouchAllowed => "touch_allowed",
            Variant::OpenPlayersDoor => "open_players_door",
            Variant::CompleteVn => "complete_vn",
            Variant::TripleChoice => "triple_choice",
        }
    }
}

impl std::str::FromStr for Variant {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let normalized = s.replace('-', "_");
        Variant::ALL
            .into_iter()
            .find(|v| v.name() == normalized)
            .or(match normalized.as_str() {
                "touch" => Some(Variant::TouchAllowed),
                "restart" => Some(Variant::RestartOnReveal),
                "triple" => Some(Variant::TripleChoice),
                _ => None,
            })
            .ok_or_else(|| format!("unknown rule variant {s:?}"))
    }
}

/// How a classical host resolves the case where the player picked exactly
/// the prize ray and any door orthogonal to it is safe.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DegeneracyPolicy {
    /// Uniform random ray in the complement of the player's door.
    #[default]
    Random,
    /// Complement of the player's door and the basis axis least aligned with it.
    Deterministic,
}

fn default_restart_cap() -> u32 {
    1000
}

/// Rules of one session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleSet {
    #[serde(default)]
    pub variant: Variant,
    /// Significant decimal digits of the announced door, if truncated.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub announce_precision_digits: Option<u32>,
    /// Restarts allowed under `restart_on_reveal` before the session aborts.
    #[serde(default = "default_restart_cap")]
    pub restart_cap: u32,
    #[serde(default)]
    pub degeneracy: DegeneracyPolicy,
}

impl Default for RuleSet {
    fn default() -> Self {
        Self::new(Variant::Strict)
    }
}

impl RuleSet {
    pub fn new(variant: Variant) -> Self {
        Self {
            variant,
            announce_precision_digits: None,
            restart_cap: default_restart_cap(),
            degeneracy: DegeneracyPolicy::Random,
        }
    }

    pub fn strict() -> Self {
        Self::new(Variant::Strict)
    }

    pub fn with_digits(mut self, digits: u32) -> Self {
        self.announce_precision_digits = Some(digits);
        self
    }

    pub fn with_degeneracy(mut self, policy: DegeneracyPolicy) -> Self {
        self.degeneracy = policy;
        self
    }

    /// Bound on `tr(p′q)` for the final door. With a truncated announcement
    /// the player only knows the door to `10^(1−d)` per component, and the
    /// bound widens to `(2·10^(1−d))²`.
    pub fn orthogonality_tolerance(&self) -> f64 {
        match self.announce_precision_digits {
            None => EPSILON,
            Some(d) => EPSILON.max((2.0 * 10f64.powi(1 - d as i32)).powi(2)),
        }
    }

    pub fn label(&self) -> String {
        match self.announce_precision_digits {
            None => self.variant.name().to_string(),
            Some(d) => format!("{}@{}d", self.variant.name(), d),
        }
    }
}

/// Session life cycle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Prepared,
    Chosen,
    Opened,
    Finished,
    Aborted,
}

/// The player's stage-2 choice: one door, or a full orthogonal triple
/// `(p, p′, p″)` under `triple_choice`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FirstChoice {
    Single(Projector),
    Triple([Projector; 3]),
}

impl FirstChoice {
    pub fn single(p: Projector) -> Self {
        FirstChoice::Single(p)
    }

    pub fn from_state(phi: &StateVector) -> Self {
        FirstChoice::Single(phi.projector())
    }

    /// Validates that `p + p′ + p″ = 1` within [`EPSILON`].
    pub fn triple(doors: [Projector; 3]) -> Result<Self, EngineError> {
        let sum: Mat3 = doors.iter().map(|d| d.matrix()).sum();
        let defect = crate::hilbert::max_abs(&(sum - Mat3::identity()));
        if defect > EPSILON {
            return Err(EngineError::IncompleteTriple(defect));
        }
        Ok(FirstChoice::Triple(doors))
    }

    /// Builds a choice from raw matrices, validating each as a rank-one projector.
    pub fn from_matrices(matrices: &[Mat3]) -> Result<Self, EngineError> {
        let doors = matrices
            .iter()
            .map(|m| Projector::from_matrix(*m))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| EngineError::InvalidProjector(e.to_string()))?;
        match <[Projector; 3]>::try_from(doors) {
            Ok(triple) => Self::triple(triple),
            Err(doors) if doors.len() == 1 => Ok(Self::Single(doors[0].clone())),
            Err(doors) => Err(EngineError::InvalidProjector(format!(
                "expected one or three doors, got {}",
                doors.len()
            ))),
        }
    }

    /// The door `p` itself.
    pub fn primary(&self) -> &Projector {
        match self {
            FirstChoice::Single(p) => p,
            FirstChoice::Triple(t) => &t[0],
        }
    }

    pub fn phi(&self) -> &StateVector {
        self.primary().ket()
    }

    pub fn alternatives(&self) -> Option<[&Projector; 2]> {
        match self {
            FirstChoice::Single(_) => None,
            FirstChoice::Triple(t) => Some([&t[1], &t[2]]),
        }
    }
}

/// The door as announced publicly: the phase-normalized `χ`, possibly
/// truncated to a number of significant digits (and then not renormalized).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Announcement {
    #[serde(with = "crate::wire::vec3")]
    pub chi: Vec3,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub digits: Option<u32>,
}

impl Announcement {
    pub fn exact(chi: &StateVector) -> Self {
        Self {
            chi: *normalize_phase(chi).as_vec(),
            digits: None,
        }
    }

    pub fn truncated(chi: &StateVector, digits: u32) -> Self {
        Self {
            chi: truncate_announcement(&normalize_phase(chi), digits),
            digits: Some(digits),
        }
    }

    /// The player's best unit estimate of the opened door.
    pub fn door(&self) -> StateVector {
        StateVector::new(self.chi).expect("announced doors are nonzero")
    }

    pub fn is_exact(&self) -> bool {
        self.digits.is_none()
    }
}

/// Rounds every real and imaginary part to `digits` significant decimal
/// digits. The result is not renormalized.
pub fn truncate_announcement(chi: &StateVector, digits: u32) -> Vec3 {
    assert!(digits >= 1, "at least one significant digit");
    chi.as_vec().map(|z| {
        crate::hilbert::Complex64::new(round_significant(z.re, digits), round_significant(z.im, digits))
    })
}

fn round_significant(x: f64, digits: u32) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    // Formatting with a fixed mantissa length rounds correctly in decimal.
    format!("{:.*e}", digits.saturating_sub(1) as usize, x)
        .parse()
        .expect("formatted float parses")
}

/// Physical state of the prize as far as the referee tracks it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PrizeState {
    Pure(StateVector),
    /// Entangled with a quantum notepad.
    Joint(JointState),
    Mixed(DensityOperator),
}

impl PrizeState {
    /// Reduced state on the game space.
    pub fn game_state(&self) -> DensityOperator {
        match self {
            PrizeState::Pure(psi) => DensityOperator::pure(psi),
            PrizeState::Joint(j) => j.reduced_state(crate::hilbert::Factor::Game),
            PrizeState::Mixed(rho) => rho.clone(),
        }
    }

    /// Probability that a measurement of door `p` responds.
    pub fn probability(&self, p: &Projector) -> f64 {
        match self {
            PrizeState::Pure(psi) => p.expectation(psi),
            PrizeState::Joint(j) => j.game_probability(p),
            PrizeState::Mixed(rho) => rho.expectation(p),
        }
    }

    /// Lüders measurement `{p, 1 − p}` on the game space.
    pub fn measure<R: rand::Rng + ?Sized>(&self, p: &Projector, rng: &mut R) -> (bool, PrizeState) {
        match self {
            PrizeState::Pure(psi) => {
                let (hit, post) = lueders_measure(psi, p, rng);
                (hit, PrizeState::Pure(post))
            }
            PrizeState::Joint(j) => {
                let (hit, post) = j.lueders_game(p, rng);
                (hit, PrizeState::Joint(post))
            }
            PrizeState::Mixed(rho) => {
                let (hit, post) = lueders_measure_mixed(rho, p, rng);
                (hit, PrizeState::Mixed(post))
            }
        }
    }
}

/// What the host kept about the preparation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Notepad {
    /// A written note of the prepared vector (and its catalog index, if any).
    Classical {
        prize: StateVector,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        index: Option<usize>,
    },
    /// The prepared vector is public knowledge.
    Public { prize: StateVector },
    /// A qutrit entangled with the game space, possibly already consulted.
    Quantum {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        consultation: Option<Consultation>,
    },
}

/// Record of a quantum-notepad measurement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Consultation {
    pub povm: crate::hilbert::Povm,
    /// Game-space basis whose transposes were measured, for basis policies.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub basis: Option<[StateVector; 3]>,
    pub outcome: usize,
}

/// Errors raised by the referee.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EngineError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("invalid projector: {0}")]
    InvalidProjector(String),
    #[error("doors do not resolve the identity (defect {0:.3e})")]
    IncompleteTriple(f64),
    #[error("operation needs stage {expected}, session is {found:?}")]
    WrongStage { expected: &'static str, found: Stage },
    #[error("rule violation: {0}")]
    RuleViolation(String),
    #[error("host violation: {0}")]
    HostViolation(String),
    #[error(transparent)]
    Strategy(#[from] StrategyError),
    #[error(transparent)]
    Hilbert(#[from] HilbertError),
}
