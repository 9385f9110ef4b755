//! In-memory sessions and the scoreboard.

use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, Mutex, MutexGuard};
use std::time::{Duration, Instant, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use qmonty::engine::{DoorOutcome, FirstChoice, GameSession, RuleSet, Stage, Variant};
use qmonty::hilbert::{DensityOperator, StateVector};
use qmonty::lab::{analytic_value, WinStats};
use qmonty::strategies::{
    complete_to_triple, FinalView, HostStrategy, PlayerStrategy, DEFAULT_CHEAT_TOLERANCE,
};
use qmonty::RandomStream;

use super::error::ApiError;

/// Player helpers offered by the hint endpoint.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HintMode {
    Stick,
    Switch,
    CheatFinite,
    CheatReal,
}

impl HintMode {
    pub const ALL: [HintMode; 4] = [HintMode::Stick, HintMode::Switch, HintMode::CheatFinite, HintMode::CheatReal];

    pub fn name(self) -> &'static str {
        match self {
            HintMode::Stick => "stick",
            HintMode::Switch => "switch",
            HintMode::CheatFinite => "cheat_finite",
            HintMode::CheatReal => "cheat_real",
        }
    }

    /// The strategy behind the mode, or why it is not on offer for `host`.
    fn player(self, host: &HostStrategy, disclosed: bool) -> Result<PlayerStrategy, ApiError> {
        let hidden = || ApiError::invalid(format!("{} needs the host strategy to be disclosed", self.name()));
        match self {
            HintMode::Stick => Ok(PlayerStrategy::stick()),
            HintMode::Switch => Ok(PlayerStrategy::switch()),
            HintMode::CheatFinite => {
                if !disclosed {
                    return Err(hidden());
                }
                let catalog = host
                    .catalog()
                    .ok_or_else(|| ApiError::invalid(format!("host {} has no finite catalog", host.label())))?;
                Ok(PlayerStrategy::FiniteSetCheat {
                    known: catalog.vectors().to_vec(),
                    phi: None,
                    tolerance: DEFAULT_CHEAT_TOLERANCE,
                })
            }
            HintMode::CheatReal => {
                if !disclosed {
                    return Err(hidden());
                }
                match host {
                    HostStrategy::RealVector => Ok(PlayerStrategy::RealCheat),
                    _ => Err(ApiError::invalid(format!("host {} does not use real prize vectors", host.label()))),
                }
            }
        }
    }
}

pub(super) fn mode_offered(mode: HintMode, host: &HostStrategy) -> bool {
    mode.player(host, true).is_ok()
}

/// Games and wins. Reveals and aborted games have no final door; they are
/// tallied under the modes `revealed` and `aborted`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct Tally {
    pub games: u64,
    pub wins: u64,
}

impl Tally {
    fn add(&mut self, won: bool) {
        self.games += 1;
        self.wins += u64::from(won);
    }
}

/// A tally with its rate and 95% interval.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TallyView {
    pub games: u64,
    pub wins: u64,
    pub rate: Option<f64>,
    pub ci_low: Option<f64>,
    pub ci_high: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub analytic: Option<f64>,
}

impl TallyView {
    fn new(t: Tally, analytic: Option<f64>) -> Self {
        let stats = (t.games > 0).then(|| WinStats::new(t.wins, t.games, 0));
        Self {
            games: t.games,
            wins: t.wins,
            rate: stats.map(|s| s.estimate),
            ci_low: stats.map(|s| s.ci_low),
            ci_high: stats.map(|s| s.ci_high),
            analytic,
        }
    }
}

/// Reference win rate for a helper mode, where one is known. Stick and
/// switch values assume a Haar-random first door, so they are only given
/// when the host's average prize state is maximally mixed and no choice
/// of door changes them.
fn analytic(host: &HostStrategy, rules: &RuleSet, mode: &str) -> Option<f64> {
    let mode = HintMode::ALL.into_iter().find(|m| m.name() == mode)?;
    let player = mode.player(host, true).ok()?;
    if matches!(mode, HintMode::Stick | HintMode::Switch) {
        let flat = host.mean_density()?.distance(&DensityOperator::maximally_mixed()) < 1e-12;
        if !flat {
            return None;
        }
    }
    analytic_value(host, &player, rules)
}

/// What a stage-3 request led to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DoorEvent {
    Opened,
    RevealedPrize,
    Restarted,
    Aborted,
}

pub struct SessionRecord {
    pub id: String,
    pub host: Arc<HostStrategy>,
    pub rules: RuleSet,
    pub disclose_host: bool,
    pub seed: u64,
    /// Games started in this session, counting the current one.
    pub round: u64,
    pub game: GameSession,
    /// The player-side stream of the current round; hints use a copy so a
    /// hint and the committed final door agree.
    player_rng: RandomStream,
    pub last_event: Option<DoorEvent>,
    pub final_mode: Option<String>,
    pub tally: Tally,
    pub by_mode: BTreeMap<String, Tally>,
    pub created_at: u64,
    last_used: Instant,
}

impl SessionRecord {
    fn new(id: String, host: HostStrategy, rules: RuleSet, disclose_host: bool, seed: u64) -> Result<Self, ApiError> {
        let host = Arc::new(host);
        let game = GameSession::new(rules.clone(), host.clone(), RandomStream::engine(seed, 0))?;
        Ok(Self {
            id,
            host,
            rules,
            disclose_host,
            seed,
            round: 1,
            game,
            player_rng: RandomStream::player(seed, 0),
            last_event: None,
            final_mode: None,
            tally: Tally::default(),
            by_mode: BTreeMap::new(),
            created_at: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
            last_used: Instant::now(),
        })
    }

    pub fn is_over(&self) -> bool {
        matches!(self.game.stage(), Stage::Finished | Stage::Aborted)
    }

    fn next_round(&mut self) -> Result<(), ApiError> {
        let index = self.round;
        self.game = GameSession::new(self.rules.clone(), self.host.clone(), RandomStream::engine(self.seed, index))?;
        self.player_rng = RandomStream::player(self.seed, index);
        self.round += 1;
        self.last_event = None;
        self.final_mode = None;
        Ok(())
    }

    pub fn hint_modes(&self) -> Vec<HintMode> {
        HintMode::ALL
            .into_iter()
            .filter(|m| m.player(&self.host, self.disclose_host).is_ok())
            .collect()
    }

    /// Stages 2 and 3. A finished session starts its next game first.
    pub fn open_door(
        &mut self,
        phi: Option<StateVector>,
        doors: Option<[StateVector; 3]>,
        scoreboard: &Scoreboard,
    ) -> Result<DoorEvent, ApiError> {
        if self.is_over() {
            self.next_round()?;
        }
        if self.rules.variant != Variant::OpenPlayersDoor {
            let choice = match (phi, doors) {
                (_, Some(doors)) => FirstChoice::triple(doors.map(|d| d.projector()))?,
                (Some(phi), None) if self.rules.variant == Variant::TripleChoice => {
                    FirstChoice::Triple(complete_to_triple(&phi, &mut self.player_rng).map(|d| d.projector()))
                }
                (Some(phi), None) => FirstChoice::from_state(&phi),
                (None, None) => return Err(ApiError::invalid("door request needs phi or doors")),
            };
            self.game.player_choose(choice)?;
        }
        let outcome = self.game.host_open_door();
        let event = match outcome {
            Ok(DoorOutcome::Opened { .. }) => DoorEvent::Opened,
            Ok(DoorOutcome::RevealedPrize { .. }) => DoorEvent::RevealedPrize,
            Ok(DoorOutcome::Restarted { .. }) => DoorEvent::Restarted,
            Ok(DoorOutcome::Aborted { .. }) => DoorEvent::Aborted,
            Err(e) => {
                if self.game.stage() == Stage::Aborted {
                    self.record("aborted", false, scoreboard);
                }
                return Err(e.into());
            }
        };
        match event {
            DoorEvent::RevealedPrize => self.record("revealed", true, scoreboard),
            DoorEvent::Aborted => self.record("aborted", false, scoreboard),
            DoorEvent::Opened | DoorEvent::Restarted => {}
        }
        self.last_event = Some(event);
        Ok(event)
    }

    /// The door `mode` would play now, without committing it.
    pub fn hint(&self, mode: HintMode) -> Result<StateVector, ApiError> {
        if self.game.stage() != Stage::Opened {
            return Err(ApiError::wrong_stage(format!(
                "hints need an opened door; session is {:?}",
                self.game.stage()
            )));
        }
        let player = mode.player(&self.host, self.disclose_host)?;
        let view = FinalView {
            first: self.game.first_choice(),
            announced: self.game.announcement().expect("opened sessions announce a door"),
        };
        let mut rng = self.player_rng.clone();
        player
            .final_choice(view, &mut rng)
            .map_err(|e| ApiError::invalid(format!("{} does not apply: {e}", mode.name())))
    }

    /// Stage 4, with a helper mode or an explicit vector.
    pub fn final_door(
        &mut self,
        mode: Option<HintMode>,
        vector: Option<StateVector>,
        scoreboard: &Scoreboard,
    ) -> Result<bool, ApiError> {
        let (door, label) = match (mode, vector) {
            (Some(mode), None) => (self.hint(mode)?, mode.name()),
            (None, Some(v)) => (v, "manual"),
            _ => return Err(ApiError::invalid("final request needs exactly one of mode and vector")),
        };
        let won = self.game.player_final(&door.projector())?;
        self.final_mode = Some(label.to_string());
        self.record(label, won, scoreboard);
        Ok(won)
    }

    fn record(&mut self, mode: &str, won: bool, scoreboard: &Scoreboard) {
        self.tally.add(won);
        self.by_mode.entry(mode.to_string()).or_default().add(won);
        scoreboard.add(&self.host, &self.rules, mode, won);
    }

    pub fn tally_view(&self) -> TallyView {
        TallyView::new(self.tally, None)
    }

    pub fn by_mode_view(&self) -> BTreeMap<String, TallyView> {
        self.by_mode
            .iter()
            .map(|(mode, t)| (mode.clone(), TallyView::new(*t, analytic(&self.host, &self.rules, mode))))
            .collect()
    }
}

/// Results over all sessions by host, rules and player mode.
#[derive(Default)]
pub struct Scoreboard {
    entries: Mutex<BTreeMap<(String, String, String), (Tally, Option<f64>)>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScoreboardEntry {
    pub host: String,
    pub rules: String,
    pub mode: String,
    #[serde(flatten)]
    pub tally: TallyView,
}

impl Scoreboard {
    fn add(&self, host: &HostStrategy, rules: &RuleSet, mode: &str, won: bool) {
        let key = (host.label(), rules.label(), mode.to_string());
        let mut entries = lock(&self.entries);
        let entry = entries
            .entry(key)
            .or_insert_with(|| (Tally::default(), analytic(host, rules, mode)));
        entry.0.add(won);
    }

    pub fn entries(&self) -> Vec<ScoreboardEntry> {
        lock(&self.entries)
            .iter()
            .map(|((host, rules, mode), (tally, analytic))| ScoreboardEntry {
                host: host.clone(),
                rules: rules.clone(),
                mode: mode.clone(),
                tally: TallyView::new(*tally, *analytic),
            })
            .collect()
    }
}

fn lock<T>(m: &Mutex<T>) -> MutexGuard<'_, T> {
    m.lock().unwrap_or_else(|poisoned| poisoned.into_inner())
}

pub type SharedRecord = Arc<Mutex<SessionRecord>>;

/// Sessions by id. Each session sits behind its own lock, so requests on
/// one session are serialized while different sessions proceed in parallel.
pub struct Store {
    sessions: Mutex<HashMap<String, SharedRecord>>,
    pub scoreboard: Scoreboard,
    idle_timeout: Duration,
}

impl Store {
    pub fn new(idle_timeout: Duration) -> Self {
        Self {
            sessions: Mutex::new(HashMap::new()),
            scoreboard: Scoreboard::default(),
            idle_timeout,
        }
    }

    pub fn create(
        &self,
        host: HostStrategy,
        rules: RuleSet,
        disclose_host: bool,
        seed: Option<u64>,
    ) -> Result<SharedRecord, ApiError> {
        let id = uuid::Uuid::new_v4();
        let seed = seed.unwrap_or_else(|| id.as_u64_pair().1);
        let record = SessionRecord::new(id.to_string(), host, rules, disclose_host, seed)?;
        let shared = Arc::new(Mutex::new(record));
        lock(&self.sessions).insert(id.to_string(), shared.clone());
        Ok(shared)
    }

    /// Runs `f` on the session, refreshing its idle clock.
    pub fn with<T>(&self, id: &str, f: impl FnOnce(&mut SessionRecord) -> T) -> Result<T, ApiError> {
        let shared = lock(&self.sessions).get(id).cloned().ok_or_else(|| ApiError::not_found(id))?;
        let mut record = lock(&shared);
        if record.last_used.elapsed() >= self.idle_timeout {
            drop(record);
            lock(&self.sessions).remove(id);
            return Err(ApiError::not_found(id));
        }
        record.last_used = Instant::now();
        Ok(f(&mut record))
    }

    pub fn remove(&self, id: &str) -> bool {
        lock(&self.sessions).remove(id).is_some()
    }

    /// Drops every session idle for longer than the timeout.
    pub fn purge_expired(&self) -> usize {
        let mut sessions = lock(&self.sessions);
        let before = sessions.len();
        sessions.retain(|_, record| lock(record).last_used.elapsed() < self.idle_timeout);
        before - sessions.len()
    }

    pub fn len(&self) -> usize {
        lock(&self.sessions).len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn idle_timeout(&self) -> Duration {
        self.idle_timeout
    }
}
