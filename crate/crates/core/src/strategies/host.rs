use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{door_avoiding, safe_door, StrategyError};
use crate::engine::{FirstChoice, Notepad, PrizeState, RuleSet};
use crate::hilbert::{
    haar_random_unit, maximally_entangled, orthogonal_complement_vector,
    random_real_unit, DensityOperator, Effect, Mat3, Povm, StateVector, EPSILON,
};

/// Quiz-master strategy. Serialized with a `kind` tag.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum HostStrategy {
    /// Each vector of an orthonormal basis with probability 1/3 (standard basis by default).
    Axes {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        basis: Option<[StateVector; 3]>,
    },
    /// A finite catalog of prize vectors with given probabilities.
    FiniteSet(FiniteCatalog),
    /// Uniform random real unit vector.
    RealVector,
    /// Unitarily invariant random prize.
    Haar,
    /// Prepares the maximally entangled state with a quantum notepad.
    Entangled { policy: NotepadPolicy },
    /// Haar prize, but opens a random door orthogonal to the player's without looking.
    IgnoreNotepad,
    /// Publicly known prize; opens with a complete von Neumann measurement.
    CompleteVn { prize: StateVector },
    /// Haar prize. Deliberately opens the prize door when the player's
    /// overlap with it is below `reveal_below`; otherwise plays legally.
    Aborting { reveal_below: f64 },
    /// Chooses one of several classical-notepad hosts at random each game.
    Mixture { components: Vec<MixtureComponent> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureComponent {
    pub weight: f64,
    pub host: HostStrategy,
}

/// How an entangled host consults his notepad.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NotepadPolicy {
    /// A fixed POVM of rank-one effects.
    FixedPovm(FixedPovm),
    /// The basis of transposes of the player's triple.
    TransposeOfPlayerTriple,
}

/// `v · |φ⟩⟨φ|`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankOneEffect {
    #[serde(default)]
    pub label: String,
    pub weight: f64,
    pub vector: StateVector,
}

/// A validated POVM of rank-one effects, `Σ v_x |φ_x⟩⟨φ_x| = 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawFixedPovm", into = "RawFixedPovm")]
pub struct FixedPovm {
    effects: Vec<RankOneEffect>,
    povm: Povm,
}

#[derive(Serialize, Deserialize)]
struct RawFixedPovm {
    effects: Vec<RankOneEffect>,
}

impl TryFrom<RawFixedPovm> for FixedPovm {
    type Error = StrategyError;
    fn try_from(raw: RawFixedPovm) -> Result<Self, Self::Error> {
        FixedPovm::new(raw.effects)
    }
}

impl From<FixedPovm> for RawFixedPovm {
    fn from(f: FixedPovm) -> Self {
        RawFixedPovm { effects: f.effects }
    }
}

impl FixedPovm {
    pub fn new(effects: Vec<RankOneEffect>) -> Result<Self, StrategyError> {
        if let Some(e) = effects.iter().find(|e| !(e.weight > 0.0) || !e.weight.is_finite()) {
            return Err(StrategyError::Config(format!(
                "effect {:?} has non-positive weight {}",
                e.label, e.weight
            )));
        }
        let povm = Povm::new(
            effects
                .iter()
                .map(|e| Effect::rank_one(e.label.clone(), e.weight, &e.vector))
                .collect(),
        )?;
        Ok(Self { effects, povm })
    }

    /// Projective measurement in an orthonormal basis.
    pub fn projective(basis: &[StateVector; 3]) -> Self {
        let effects = basis
            .iter()
            .enumerate()
            .map(|(k, v)| RankOneEffect {
                label: k.to_string(),
                weight: 1.0,
                vector: v.clone(),
            })
            .collect();
        Self::new(effects).expect("orthonormal basis")
    }

    pub fn effects(&self) -> &[RankOneEffect] {
        &self.effects
    }

    pub fn povm(&self) -> &Povm {
        &self.povm
    }

    /// The classical catalog this measurement is equivalent to: vectors
    /// `conj(φ_x)` with probabilities `v_x / 3`.
    pub fn equivalent_catalog(&self) -> FiniteCatalog {
        FiniteCatalog::new(
            self.effects.iter().map(|e| e.vector.conj()).collect(),
            Some(self.effects.iter().map(|e| e.weight / 3.0).collect()),
        )
        .expect("weights of a POVM sum to three")
    }
}

/// Prize vectors with their probabilities; sampled by bisection on the
/// cumulative distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawCatalog", into = "RawCatalog")]
pub struct FiniteCatalog {
    vectors: Arc<[StateVector]>,
    probabilities: Arc<[f64]>,
    cumulative: Arc<[f64]>,
}

#[derive(Serialize, Deserialize)]
struct RawCatalog {
    vectors: Vec<StateVector>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    probabilities: Option<Vec<f64>>,
}

impl TryFrom<RawCatalog> for FiniteCatalog {
    type Error = StrategyError;
    fn try_from(raw: RawCatalog) -> Result<Self, Self::Error> {
        FiniteCatalog::new(raw.vectors, raw.probabilities)
    }
}

impl From<FiniteCatalog> for RawCatalog {
    fn from(c: FiniteCatalog) -> Self {
        RawCatalog {
            vectors: c.vectors.to_vec(),
            probabilities: Some(c.probabilities.to_vec()),
        }
    }
}

impl FiniteCatalog {
    /// Uniform probabilities when none are given.
    pub fn new(vectors: Vec<StateVector>, probabilities: Option<Vec<f64>>) -> Result<Self, StrategyError> {
        if vectors.is_empty() {
            return Err(StrategyError::Config("empty catalog".into()));
        }
        let n = vectors.len();
        let probabilities = probabilities.unwrap_or_else(|| vec![1.0 / n as f64; n]);
        if probabilities.len() != n {
            return Err(StrategyError::Config(format!(
                "{n} vectors but {} probabilities",
                probabilities.len()
            )));
        }
        if probabilities.iter().any(|p| !(*p >= 0.0) || !p.is_finite()) {
            return Err(StrategyError::Config("negative probability".into()));
        }
        let total: f64 = probabilities.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(StrategyError::Config(format!("probabilities sum to {total}")));
        }
        let cumulative: Vec<f64> = probabilities
            .iter()
            .scan(0.0, |acc, p| {
                *acc += p;
                Some(*acc)
            })
            .collect();
        Ok(Self {
            vectors: vectors.into(),
            probabilities: probabilities.into(),
            cumulative: cumulative.into(),
        })
    }

    /// `n` Haar-random vectors with uniform weights.
    pub fn haar<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<Self, StrategyError> {
        Self::new((0..n).map(|_| haar_random_unit(rng)).collect(), None)
    }

    pub fn vectors(&self) -> &[StateVector] {
        &self.vectors
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u = rng.random::<f64>() * self.cumulative[self.cumulative.len() - 1];
        let i = self.cumulative.partition_point(|&c| c <= u);
        // Skip zero-probability entries that share a cumulative value.
        i.min(self.len() - 1)
    }

    /// `Σ v_α |Ψ_α⟩⟨Ψ_α|`.
    pub fn mean_density(&self) -> DensityOperator {
        let m = self
            .vectors
            .iter()
            .zip(self.probabilities.iter())
            .fold(Mat3::zeros(), |acc, (v, &p)| acc + v.projector().matrix().scale(p));
        DensityOperator::normalized(m).expect("catalog mean is a density operator")
    }
}

/// Result of stage 1.
#[derive(Debug, Clone, PartialEq)]
pub struct Preparation {
    pub prize: PrizeState,
    pub notepad: Notepad,
}

/// A notepad measurement the host wants performed before choosing a door.
#[derive(Debug, Clone)]
pub struct ConsultPlan {
    pub povm: Povm,
    pub basis: Option<[StateVector; 3]>,
}

/// What the host sees when choosing a door.
#[derive(Debug, Clone, Copy)]
pub struct DoorRequest<'a> {
    pub notepad: &'a Notepad,
    pub first: Option<&'a FirstChoice>,
    pub rules: &'a RuleSet,
}

/// The host's proposed door.
#[derive(Debug, Clone, PartialEq)]
pub struct DoorPick {
    pub chi: StateVector,
    /// The constraints left more than one safe door and the degeneracy policy chose.
    pub degenerate: bool,
    /// For complete von Neumann hosts: the other two basis rays `(q′, q″)`.
    pub vn_pair: Option<(StateVector, StateVector)>,
}

impl DoorPick {
    fn plain(chi: StateVector, degenerate: bool) -> Self {
        Self {
            chi,
            degenerate,
            vn_pair: None,
        }
    }
}

impl HostStrategy {
    pub fn axes() -> Self {
        HostStrategy::Axes { basis: None }
    }

    pub fn finite_set(catalog: FiniteCatalog) -> Self {
        HostStrategy::FiniteSet(catalog)
    }

    pub fn entangled_fixed(povm: FixedPovm) -> Self {
        HostStrategy::Entangled {
            policy: NotepadPolicy::FixedPovm(povm),
        }
    }

    pub fn entangled_transpose() -> Self {
        HostStrategy::Entangled {
            policy: NotepadPolicy::TransposeOfPlayerTriple,
        }
    }

    /// Short name for reports.
    pub fn label(&self) -> String {
        match self {
            HostStrategy::Axes { .. } => "axes".into(),
            HostStrategy::FiniteSet(c) => format!("finite:{}", c.len()),
            HostStrategy::RealVector => "real".into(),
            HostStrategy::Haar => "haar".into(),
            HostStrategy::Entangled {
                policy: NotepadPolicy::FixedPovm(f),
            } => format!("entangled-povm:{}", f.effects().len()),
            HostStrategy::Entangled {
                policy: NotepadPolicy::TransposeOfPlayerTriple,
            } => "entangled".into(),
            HostStrategy::IgnoreNotepad => "ignore".into(),
            HostStrategy::CompleteVn { .. } => "complete-vn".into(),
            HostStrategy::Aborting { reveal_below } => format!("aborting:{reveal_below}"),
            HostStrategy::Mixture { components } => {
                let parts: Vec<String> = components
                    .iter()
                    .map(|c| format!("{}*{}", c.weight, c.host.label()))
                    .collect();
                format!("mixture({})", parts.join("+"))
            }
        }
    }

    /// Checks parameters that deserialization alone cannot.
    pub fn validate(&self) -> Result<(), StrategyError> {
        match self {
            HostStrategy::Axes { basis: Some(b) } => {
                for i in 0..3 {
                    for j in (i + 1)..3 {
                        if b[i].overlap(&b[j]) > EPSILON {
                            return Err(StrategyError::Config("axes basis is not orthonormal".into()));
                        }
                    }
                }
                Ok(())
            }
            HostStrategy::Aborting { reveal_below } if !(0.0..=1.0).contains(reveal_below) => {
                Err(StrategyError::Config(format!(
                    "reveal threshold {reveal_below} outside [0, 1]"
                )))
            }
            HostStrategy::Mixture { components } => {
                if components.is_empty() {
                    return Err(StrategyError::Config("empty mixture".into()));
                }
                let total: f64 = components.iter().map(|c| c.weight).sum();
                if components.iter().any(|c| !(c.weight >= 0.0)) || (total - 1.0).abs() > 1e-9 {
                    return Err(StrategyError::Config(format!(
                        "mixture weights must be non-negative and sum to one (got {total})"
                    )));
                }
                for c in components {
                    if !c.host.is_classical() {
                        return Err(StrategyError::Config(format!(
                            "mixture component {} does not keep a classical notepad",
                            c.host.label()
                        )));
                    }
                    c.host.validate()?;
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// Keeps a classical note of the prize and opens the safe door computed from it.
    pub fn is_classical(&self) -> bool {
        matches!(
            self,
            HostStrategy::Axes { .. }
                | HostStrategy::FiniteSet(_)
                | HostStrategy::RealVector
                | HostStrategy::Haar
                | HostStrategy::Mixture { .. }
        )
    }

    pub fn is_entangled(&self) -> bool {
        matches!(self, HostStrategy::Entangled { .. })
    }

    /// Never opens the prize door under strict rules and leaves the prize
    /// undisturbed when opening.
    pub fn is_legal_under_strict(&self) -> bool {
        !matches!(
            self,
            HostStrategy::IgnoreNotepad | HostStrategy::Aborting { .. } | HostStrategy::CompleteVn { .. }
        )
    }

    /// Catalog of possible prize vectors, where the host has one.
    pub fn catalog(&self) -> Option<FiniteCatalog> {
        match self {
            HostStrategy::Axes { basis } => Some(
                FiniteCatalog::new(
                    basis.clone().unwrap_or_else(StateVector::standard_basis).to_vec(),
                    None,
                )
                .expect("three vectors"),
            ),
            HostStrategy::FiniteSet(c) => Some(c.clone()),
            HostStrategy::Entangled {
                policy: NotepadPolicy::FixedPovm(f),
            } => Some(f.equivalent_catalog()),
            HostStrategy::CompleteVn { prize } => {
                Some(FiniteCatalog::new(vec![prize.clone()], None).expect("one vector"))
            }
            _ => None,
        }
    }

    /// Closed-form mean density operator of the prepared prize, where known.
    pub fn mean_density(&self) -> Option<DensityOperator> {
        match self {
            HostStrategy::Axes { .. }
            | HostStrategy::Haar
            | HostStrategy::RealVector
            | HostStrategy::Entangled { .. }
            | HostStrategy::IgnoreNotepad
            | HostStrategy::Aborting { .. } => Some(DensityOperator::maximally_mixed()),
            HostStrategy::FiniteSet(c) => Some(c.mean_density()),
            HostStrategy::CompleteVn { prize } => Some(DensityOperator::pure(prize)),
            HostStrategy::Mixture { components } => {
                let parts = components
                    .iter()
                    .map(|c| c.host.mean_density().map(|rho| (c.weight, rho)))
                    .collect::<Option<Vec<_>>>()?;
                let refs: Vec<(f64, &DensityOperator)> = parts.iter().map(|(w, r)| (*w, r)).collect();
                DensityOperator::mixture(&refs).ok()
            }
        }
    }

    /// Stage 1.
    pub fn prepare<R: Rng + ?Sized>(&self, rng: &mut R) -> Preparation {
        let classical = |prize: StateVector, index: Option<usize>| Preparation {
            prize: PrizeState::Pure(prize.clone()),
            notepad: Notepad::Classical { prize, index },
        };
        match self {
            HostStrategy::Axes { basis } => {
                let k = rng.random_range(0..3);
                let v = match basis {
                    Some(b) => b[k].clone(),
                    None => StateVector::basis(k),
                };
                classical(v, Some(k))
            }
            HostStrategy::FiniteSet(c) => {
                let i = c.sample(rng);
                classical(c.vectors()[i].clone(), Some(i))
            }
            HostStrategy::RealVector => classical(random_real_unit(rng), None),
            HostStrategy::Haar | HostStrategy::IgnoreNotepad | HostStrategy::Aborting { .. } => {
                classical(haar_random_unit(rng), None)
            }
            HostStrategy::Entangled { .. } => Preparation {
                prize: PrizeState::Joint(maximally_entangled()),
                notepad: Notepad::Quantum { consultation: None },
            },
            HostStrategy::CompleteVn { prize } => Preparation {
                prize: PrizeState::Pure(prize.clone()),
                notepad: Notepad::Public {
                    prize: prize.clone(),
                },
            },
            HostStrategy::Mixture { components } => {
                let u = rng.random::<f64>();
                let mut acc = 0.0;
                let chosen = components
                    .iter()
                    .find(|c| {
                        acc += c.weight;
                        u < acc
                    })
                    .unwrap_or_else(|| components.last().expect("validated non-empty"));
                chosen.host.prepare(rng)
            }
        }
    }

    /// Notepad measurement to perform before stage 3, if any.
    pub fn consultation_plan<R: Rng + ?Sized>(
        &self,
        first: Option<&FirstChoice>,
        rng: &mut R,
    ) -> Option<ConsultPlan> {
        let HostStrategy::Entangled { policy } = self else {
            return None;
        };
        Some(match policy {
            NotepadPolicy::FixedPovm(f) => ConsultPlan {
                povm: f.povm().clone(),
                basis: None,
            },
            NotepadPolicy::TransposeOfPlayerTriple => {
                let basis = match first {
                    Some(FirstChoice::Triple(t)) => t.clone().map(|p| p.ket().clone()),
                    Some(FirstChoice::Single(p)) => super::complete_to_triple(p.ket(), rng),
                    None => super::complete_to_triple(&haar_random_unit(rng), rng),
                };
                ConsultPlan {
                    povm: Povm::projective(&basis.clone().map(|v| v.conj())),
                    basis: Some(basis),
                }
            }
        })
    }

    /// Stage 3: the door to open.
    pub fn pick_door<R: Rng + ?Sized>(
        &self,
        request: DoorRequest<'_>,
        rng: &mut R,
    ) -> Result<DoorPick, StrategyError> {
        let policy = request.rules.degeneracy;
        match (self, request.notepad) {
            (HostStrategy::Entangled { policy: np }, Notepad::Quantum { consultation }) => {
                let c = consultation
                    .as_ref()
                    .ok_or_else(|| StrategyError::Config("notepad was not consulted".into()))?;
                match np {
                    NotepadPolicy::FixedPovm(f) => {
                        let ray = f.effects()[c.outcome].vector.conj();
                        Ok(classical_door(&ray, request.first, policy, rng))
                    }
                    NotepadPolicy::TransposeOfPlayerTriple => {
                        let basis = c.basis.as_ref().ok_or_else(|| {
                            StrategyError::Config("transpose policy without a basis".into())
                        })?;
                        let k = c.outcome;
                        // basis[0] is the player's door, or an arbitrary ray when none was chosen.
                        let other = match (request.first, k) {
                            (None, _) => (k + 1 + rng.random_range(0..2)) % 3,
                            (Some(_), 0) => 1 + rng.random_range(0..2),
                            (Some(_), 1) => 2,
                            (Some(_), _) => 1,
                        };
                        Ok(DoorPick::plain(basis[other].clone(), k == 0 && request.first.is_some()))
                    }
                }
            }
            (HostStrategy::Entangled { .. }, _) => {
                Err(StrategyError::Config("entangled host without a quantum notepad".into()))
            }
            (HostStrategy::IgnoreNotepad, _) => Ok(match request.first {
                Some(FirstChoice::Triple(t)) => {
                    DoorPick::plain(t[1 + rng.random_range(0..2)].ket().clone(), false)
                }
                Some(FirstChoice::Single(p)) => DoorPick::plain(door_avoiding(p.ket(), policy, rng), false),
                None => DoorPick::plain(haar_random_unit(rng), false),
            }),
            (HostStrategy::Aborting { reveal_below }, notepad) => {
                let prize = noted_prize(notepad)?;
                if let Some(FirstChoice::Single(p)) = request.first {
                    let phi = p.ket();
                    if phi.overlap(prize) < *reveal_below {
                        let amplitude = crate::hilbert::inner(phi.as_vec(), prize.as_vec());
                        if let Ok(chi) = StateVector::new(prize.as_vec() - phi.as_vec() * amplitude) {
                            return Ok(DoorPick::plain(chi, false));
                        }
                    }
                }
                Ok(classical_door(prize, request.first, policy, rng))
            }
            (HostStrategy::CompleteVn { .. }, notepad) => {
                let prize = noted_prize(notepad)?;
                let mut pick = classical_door(prize, request.first, policy, rng);
                let w = orthogonal_complement_vector(&pick.chi, prize)
                    .expect("the door is orthogonal to the prize");
                let half = std::f64::consts::FRAC_1_SQRT_2;
                let q1 = StateVector::new((prize.as_vec() + w.as_vec()).scale(half))?;
                let q2 = StateVector::new((prize.as_vec() - w.as_vec()).scale(half))?;
                pick.vn_pair = Some((q1, q2));
                Ok(pick)
            }
            (_, notepad) => {
                let prize = noted_prize(notepad)?;
                Ok(classical_door(prize, request.first, policy, rng))
            }
        }
    }
}

fn noted_prize(notepad: &Notepad) -> Result<&StateVector, StrategyError> {
    match notepad {
        Notepad::Classical { prize, .. } | Notepad::Public { prize } => Ok(prize),
        Notepad::Quantum { .. } => Err(StrategyError::Config(
            "classical host handed a quantum notepad".into(),
        )),
    }
}

/// Door for a host who knows the prize ray: orthogonal to the prize and to
/// the player's door; under the triple rule, the alternative least aligned
/// with the prize.
fn classical_door<R: Rng + ?Sized>(
    prize: &StateVector,
    first: Option<&FirstChoice>,
    policy: crate::engine::DegeneracyPolicy,
    rng: &mut R,
) -> DoorPick {
    match first {
        None => DoorPick::plain(door_avoiding(prize, policy, rng), true),
        Some(FirstChoice::Single(p)) => {
            let (chi, degenerate) = safe_door(p.ket(), prize, policy, rng);
            DoorPick::plain(chi, degenerate)
        }
        Some(FirstChoice::Triple(t)) => {
            let (a, b) = (t[1].ket(), t[2].ket());
            let (oa, ob) = (a.overlap(prize), b.overlap(prize));
            if (oa - ob).abs() <= EPSILON {
                let chi = if rng.random::<bool>() { a } else { b };
                DoorPick::plain(chi.clone(), true)
            } else if oa < ob {
                DoorPick::plain(a.clone(), false)
            } else {
                DoorPick::plain(b.clone(), false)
            }
        }
    }
}
