use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{LabError, ReportFormat, WinStats};
use crate::engine::{DoorOutcome, EngineError, GameSession, RuleSet, Transcript, Variant};
use crate::strategies::{FinalView, HostStrategy, PlayerStrategy};
use crate::RandomStream;

/// Trials per parallel work unit.
const CHUNK: u64 = 2048;

/// One batch experiment, as read from a JSON config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub host: HostStrategy,
    pub player: PlayerStrategy,
    #[serde(default)]
    pub rules: RuleSet,
    pub trials: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub format: ReportFormat,
}

impl ExperimentConfig {
    pub fn new(host: HostStrategy, player: PlayerStrategy, rules: RuleSet, trials: u64, seed: u64) -> Self {
        Self {
            host,
            player,
            rules,
            trials,
            seed,
            format: ReportFormat::Csv,
        }
    }

    pub fn validate(&self) -> Result<(), LabError> {
        if self.trials == 0 {
            return Err(LabError::Config("trials must be at least 1".into()));
        }
        self.host
            .validate()
            .and_then(|_| self.player.validate())
            .map_err(|e| LabError::Config(e.to_string()))
    }
}

/// Win statistics plus how often the player's strategy could not apply.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunOutcome {
    pub stats: WinStats,
    /// Games where the player fell back to switching.
    pub fallbacks: u64,
    /// Total restarts under `restart_on_reveal`.
    pub restarts: u64,
    /// Games that hit the restart cap; counted as losses.
    pub aborted: u64,
    /// Games won by the host revealing the prize under `reveal_wins`.
    pub revealed: u64,
}

#[derive(Debug, Default, Clone, Copy)]
struct Tally {
    wins: u64,
    fallbacks: u64,
    restarts: u64,
    aborted: u64,
    revealed: u64,
}

impl Tally {
    fn add(&mut self, t: &Transcript) {
        self.wins += u64::from(t.won == Some(true));
        self.fallbacks += u64::from(t.fallback.is_some());
        self.restarts += u64::from(t.restarts);
        self.aborted += u64::from(t.stage == crate::engine::Stage::Aborted);
        self.revealed += u64::from(t.final_door.is_none() && t.won == Some(true));
    }

    fn merge(mut self, other: Tally) -> Tally {
        self.wins += other.wins;
        self.fallbacks += other.fallbacks;
        self.restarts += other.restarts;
        self.aborted += other.aborted;
        self.revealed += other.revealed;
        self
    }
}

/// Plays trial `index` of a run with master seed `seed` to completion.
pub fn play_game(
    host: &Arc<HostStrategy>,
    player: &PlayerStrategy,
    rules: &RuleSet,
    seed: u64,
    index: u64,
) -> Result<Transcript, EngineError> {
    let mut session = GameSession::new(rules.clone(), host.clone(), RandomStream::engine(seed, index))?;
    let mut player_rng = RandomStream::player(seed, index);
    loop {
        if rules.variant != Variant::OpenPlayersDoor {
            let first = player.player_first(rules.variant, &mut player_rng)?;
            session.player_choose(first)?;
        }
        match session.host_open_door()? {
            DoorOutcome::Opened { .. } => break,
            DoorOutcome::Restarted { .. } => continue,
            DoorOutcome::RevealedPrize { .. } | DoorOutcome::Aborted { .. } => {
                return Ok(session.transcript().clone())
            }
        }
    }
    let decision = player.decide(
        FinalView {
            first: session.first_choice(),
            announced: session.announcement().expect("opened sessions announce a door"),
        },
        &mut player_rng,
    );
    if let Some(reason) = decision.fallback {
        session.note_fallback(reason.to_string());
    }
    session.player_final(&decision.door.projector())?;
    Ok(session.transcript().clone())
}

/// Runs the experiment and returns its win statistics.
pub fn run_trials(config: &ExperimentConfig) -> Result<WinStats, LabError> {
    run_experiment(config).map(|o| o.stats)
}

/// Runs `config.trials` independent games in parallel. The first failing
/// trial (lowest index) aborts the run.
pub fn run_experiment(config: &ExperimentConfig) -> Result<RunOutcome, LabError> {
    config.validate()?;
    let host = Arc::new(config.host.clone());
    let chunks: Vec<(u64, u64)> = (0..config.trials)
        .step_by(CHUNK as usize)
        .map(|start| (start, (start + CHUNK).min(config.trials)))
        .collect();
    let partials: Vec<Result<Tally, (u64, EngineError)>> = chunks
        .par_iter()
        .map(|&(start, end)| {
            let mut tally = Tally::default();
            for i in start..end {
                let t = play_game(&host, &config.player, &config.rules, config.seed, i).map_err(|e| (i, e))?;
                tally.add(&t);
            }
            Ok(tally)
        })
        .collect();
    let mut total = Tally::default();
    for partial in partials {
        match partial {
            Ok(t) => total = total.merge(t),
            Err((trial, EngineError::HostViolation(message))) => {
                return Err(LabError::HostViolation {
                    trial,
                    seed: config.seed,
                    message,
                })
            }
            Err((trial, source)) => {
                return Err(LabError::Engine {
                    trial,
                    seed: config.seed,
                    source,
                })
            }
        }
    }
    Ok(RunOutcome {
        stats: WinStats::new(total.wins, config.trials, config.seed),
        fallbacks: total.fallbacks,
        restarts: total.restarts,
        aborted: total.aborted,
        revealed: total.revealed,
    })
}
