//! Quiz-master and player strategies.
//!
//! Strategies are immutable values; all per-game state lives in the
//! session. Hosts propose doors and notepad measurements, players propose
//! projectors; the engine checks and executes both.

mod host;
mod model;
mod player;
mod reduction;

pub use host::{
    ConsultPlan, DoorPick, DoorRequest, FiniteCatalog, FixedPovm, HostStrategy, MixtureComponent,
    NotepadPolicy, Preparation, RankOneEffect,
};
pub use model::HostModel;
pub use player::{
    complete_to_triple, project_off, real_cheat_reconstruction, FinalDecision, FinalView,
    PlayerStrategy, DEFAULT_CHEAT_TOLERANCE,
};
pub use reduction::canonical_povm_reduction;

pub(crate) use player::{avoids_all_spans, SPAN_TEST_LIMIT};

use crate::hilbert::{
    haar_random_in_complement, orthogonal_complement_vector, HilbertError, StateVector,
};
use crate::engine::DegeneracyPolicy;

/// Errors raised by strategies.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum StrategyError {
    #[error("invalid strategy configuration: {0}")]
    Config(String),
    #[error("no unique catalog vector is orthogonal to the announced door ({candidates} candidates)")]
    CheatAmbiguous { candidates: usize },
    #[error("announced door has |chi_1| = {0:.3e}; reconstruction is phase-ambiguous")]
    CheatDegenerate(f64),
    #[error("no first choice avoids every two-dimensional span of the catalog after {0} tries")]
    CheatSetupFailed(usize),
    #[error("effect {label:?} has rank {rank}; a safe door needs rank at most one")]
    EffectRankTooHigh { label: String, rank: usize },
    #[error("host model gives no posterior for this announcement")]
    NoPosterior,
    #[error(transparent)]
    Hilbert(#[from] HilbertError),
}

/// A ray orthogonal to both the player's vector and the prize. When they
/// lie on one ray any ray orthogonal to it is safe, and `policy` decides;
/// the flag reports that case.
pub(crate) fn safe_door<R: rand::Rng + ?Sized>(
    phi: &StateVector,
    prize: &StateVector,
    policy: DegeneracyPolicy,
    rng: &mut R,
) -> (StateVector, bool) {
    match orthogonal_complement_vector(phi, prize) {
        Ok(chi) => (chi, false),
        Err(_) => (door_avoiding(phi, policy, rng), true),
    }
}

/// Some ray orthogonal to `v`.
pub(crate) fn door_avoiding<R: rand::Rng + ?Sized>(
    v: &StateVector,
    policy: DegeneracyPolicy,
    rng: &mut R,
) -> StateVector {
    match policy {
        DegeneracyPolicy::Random => haar_random_in_complement(v, rng),
        DegeneracyPolicy::Deterministic => {
            let axis = StateVector::standard_basis()
                .into_iter()
                .min_by(|a, b| a.overlap(v).total_cmp(&b.overlap(v)))
                .expect("three axes");
            orthogonal_complement_vector(v, &axis)
                .expect("the least aligned axis is never on the ray of v")
        }
    }
}
