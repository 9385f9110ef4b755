use serde::{Deserialize, Serialize};

use super::{analytic_value, run_trials, ExperimentConfig, LabError, WinStats};
use crate::engine::RuleSet;
use crate::hilbert::StateVector;
use crate::strategies::{HostStrategy, MixtureComponent, PlayerStrategy, DEFAULT_CHEAT_TOLERANCE};
use crate::RandomStream;

/// One point of an angle sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub theta: f64,
    pub stats: WinStats,
    pub predicted: Option<f64>,
}

/// Plays the angle player at each `θ` against `host` under strict rules.
/// Every point uses the same seed.
pub fn theta_sweep(
    host: &HostStrategy,
    grid: &[f64],
    trials: u64,
    seed: u64,
) -> Result<Vec<SweepPoint>, LabError> {
    let rules = RuleSet::strict();
    grid.iter()
        .map(|&theta| {
            let player = PlayerStrategy::angle(theta);
            let stats = run_trials(&ExperimentConfig::new(host.clone(), player.clone(), rules.clone(), trials, seed))?;
            Ok(SweepPoint {
                theta,
                stats,
                predicted: analytic_value(host, &player, &rules),
            })
        })
        .collect()
}

/// Hosts interpolating between the unitarily invariant one (`t = 0`) and a
/// host a cheat can beat (`t = 1`): with probability `t` the prize comes
/// from the second host.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HostFamily {
    HaarToAxes,
    HaarToReal,
}

impl HostFamily {
    pub fn at(self, t: f64) -> HostStrategy {
        let target = match self {
            HostFamily::HaarToAxes => HostStrategy::axes(),
            HostFamily::HaarToReal => HostStrategy::RealVector,
        };
        if t <= 0.0 {
            HostStrategy::Haar
        } else if t >= 1.0 {
            target
        } else {
            HostStrategy::Mixture {
                components: vec![
                    MixtureComponent {
                        weight: 1.0 - t,
                        host: HostStrategy::Haar,
                    },
                    MixtureComponent { weight: t, host: target },
                ],
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbeBudget {
    /// Games per candidate player.
    pub trials: u64,
    /// Interior angles tried between switch and stick.
    pub angles: usize,
}

impl Default for ProbeBudget {
    fn default() -> Self {
        Self {
            trials: 20_000,
            angles: 7,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeEntry {
    pub label: String,
    pub player: PlayerStrategy,
    pub stats: WinStats,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeResult {
    pub best: ProbeEntry,
    pub entries: Vec<ProbeEntry>,
}

/// Tries a fixed family of players against `host` and reports the best
/// estimate. Exploratory: the candidates are stick, switch, intermediate
/// angles, both cheats, a catalog cheat where the host has a catalog, and
/// the Bayesian player for the host.
pub fn best_response_probe(host: &HostStrategy, budget: &ProbeBudget, seed: u64) -> Result<ProbeResult, LabError> {
    let mut candidates = vec![PlayerStrategy::switch(), PlayerStrategy::stick()];
    let steps = budget.angles + 1;
    candidates.extend((1..steps).map(|k| PlayerStrategy::angle(std::f64::consts::FRAC_PI_2 * k as f64 / steps as f64)));
    candidates.push(PlayerStrategy::RealCheat);
    candidates.push(PlayerStrategy::FiniteSetCheat {
        known: StateVector::standard_basis().to_vec(),
        phi: Some(StateVector::real(1.0, 1.0, 1.0).expect("nonzero")),
        tolerance: DEFAULT_CHEAT_TOLERANCE,
    });
    if host.catalog().is_some_and(|c| c.len() <= crate::strategies::SPAN_TEST_LIMIT) {
        let mut rng = RandomStream::new(seed, u64::MAX);
        if let Ok(cheat) = PlayerStrategy::finite_cheat_against(host, &mut rng) {
            candidates.push(cheat);
        }
    }
    candidates.push(PlayerStrategy::bayes_against(host));

    let rules = RuleSet::strict();
    let entries = candidates
        .into_iter()
        .map(|player| {
            let stats = run_trials(&ExperimentConfig::new(host.clone(), player.clone(), rules.clone(), budget.trials, seed))?;
            Ok(ProbeEntry {
                label: player.label(),
                player,
                stats,
            })
        })
        .collect::<Result<Vec<_>, LabError>>()?;
    let best = entries
        .iter()
        .fold(None::<&ProbeEntry>, |best, e| match best {
            Some(b) if b.stats.wins >= e.stats.wins => Some(b),
            _ => Some(e),
        })
        .expect("at least one candidate")
        .clone();
    Ok(ProbeResult { best, entries })
}
