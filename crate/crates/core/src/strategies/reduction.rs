use super::{FixedPovm, RankOneEffect, StrategyError};
use crate::hilbert::{hermitian_eigen, normalize_phase, Povm, StateVector};

/// Relative eigenvalue cutoff for counting the rank of an effect.
const RANK_CUTOFF: f64 = 1e-9;

/// Rewrites a POVM of rank-one effects as `F_x = v_x |φ_x⟩⟨φ_x|` with
/// distinct rays, merging outcomes that share a ray and dropping zero
/// effects. The weights of the result sum to three.
pub fn canonical_povm_reduction(povm: &Povm) -> Result<FixedPovm, StrategyError> {
    let mut merged: Vec<RankOneEffect> = Vec::new();
    for effect in povm.effects() {
        let (values, vectors) = hermitian_eigen(&effect.operator);
        let top = values[2];
        let rank = values.iter().filter(|&&v| v > RANK_CUTOFF.max(top * RANK_CUTOFF)).count();
        match rank {
            0 => continue,
            1 => {}
            rank => {
                return Err(StrategyError::EffectRankTooHigh {
                    label: effect.label.clone(),
                    rank,
                })
            }
        }
        let ray = normalize_phase(&StateVector::new(vectors[2])?);
        match merged.iter_mut().find(|e| e.vector.same_ray(&ray, 1e-12)) {
            Some(existing) => {
                existing.weight += top;
                existing.label = format!("{}+{}", existing.label, effect.label);
            }
            None => merged.push(RankOneEffect {
                label: effect.label.clone(),
                weight: top,
                vector: ray,
            }),
        }
    }
    FixedPovm::new(merged)
}
