use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{
    Announcement, Consultation, EngineError, FirstChoice, Notepad, PrizeState, Round, RuleSet,
    Stage, Transcript, Variant,
};
use crate::hilbert::{max_abs, Mat3, Projector, EPSILON};
use crate::strategies::{DoorRequest, HostStrategy};
use crate::RandomStream;

/// Result of stage 3.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum DoorOutcome {
    /// The door was empty; the player makes her final choice next.
    Opened { announced: Announcement },
    /// The door held the prize and the rules award it to the player.
    RevealedPrize { announced: Announcement },
    /// The door held the prize and the game starts again.
    Restarted { restarts: u32 },
    /// Too many restarts; the session is over without a result.
    Aborted { restarts: u32 },
}

/// One game under one rule set.
#[derive(Debug, Clone)]
pub struct GameSession {
    rules: RuleSet,
    host: Arc<HostStrategy>,
    rng: RandomStream,
    stage: Stage,
    prize: PrizeState,
    notepad: Notepad,
    first: Option<FirstChoice>,
    door: Option<Projector>,
    announcement: Option<Announcement>,
    final_door: Option<Projector>,
    won: Option<bool>,
    restart_count: u32,
    transcript: Transcript,
}

impl GameSession {
    /// Stage 1: the host prepares the prize.
    pub fn new(
        rules: RuleSet,
        host: impl Into<Arc<HostStrategy>>,
        rng: RandomStream,
    ) -> Result<Self, EngineError> {
        let host = host.into();
        host.validate()?;
        if rules.announce_precision_digits == Some(0) {
            return Err(EngineError::Config("announcements need at least one digit".into()));
        }
        if rules.variant == Variant::CompleteVn && !matches!(*host, HostStrategy::CompleteVn { .. }) {
            return Err(EngineError::Config(
                "complete_vn needs a host with a fixed public prize vector".into(),
            ));
        }
        let mut rng = rng;
        let prep = host.prepare(&mut rng);
        let transcript = Transcript::new(rules.clone(), host.label(), rng.seed(), rng.stream());
        let mut session = Self {
            rules,
            host,
            rng,
            stage: Stage::Prepared,
            prize: prep.prize,
            notepad: prep.notepad,
            first: None,
            door: None,
            announcement: None,
            final_door: None,
            won: None,
            restart_count: 0,
            transcript,
        };
        session.record_preparation();
        Ok(session)
    }

    fn prepare(&mut self) {
        let prep = self.host.prepare(&mut self.rng);
        self.prize = prep.prize;
        self.notepad = prep.notepad;
        self.first = None;
        self.door = None;
        self.announcement = None;
        self.stage = Stage::Prepared;
        self.record_preparation();
    }

    fn record_preparation(&mut self) {
        let (prepared, catalog_index) = match &self.notepad {
            Notepad::Classical { prize, index } => (Some(prize.clone()), *index),
            Notepad::Public { prize } => (Some(prize.clone()), None),
            Notepad::Quantum { .. } => (None, None),
        };
        self.transcript.rounds.push(Round {
            prepared,
            catalog_index,
            ..Round::default()
        });
        self.transcript.stage = Stage::Prepared;
    }

    fn expect_stage(&self, expected: Stage, name: &'static str) -> Result<(), EngineError> {
        if self.stage == expected {
            Ok(())
        } else {
            Err(EngineError::WrongStage {
                expected: name,
                found: self.stage,
            })
        }
    }

    fn abort(&mut self) {
        self.stage = Stage::Aborted;
        self.transcript.stage = Stage::Aborted;
    }

    /// Stage 2. Outside `triple_choice` a triple is reduced to its first door.
    pub fn player_choose(&mut self, choice: FirstChoice) -> Result<(), EngineError> {
        self.expect_stage(Stage::Prepared, "prepared")?;
        let choice = match (self.rules.variant, choice) {
            (Variant::OpenPlayersDoor, _) => {
                return Err(EngineError::RuleViolation(
                    "open_players_door omits the first choice".into(),
                ))
            }
            (Variant::TripleChoice, FirstChoice::Single(_)) => {
                return Err(EngineError::RuleViolation(
                    "triple_choice needs three orthogonal doors".into(),
                ))
            }
            (Variant::TripleChoice, triple) => triple,
            (_, FirstChoice::Triple(t)) => {
                let [p, _, _] = t;
                FirstChoice::Single(p)
            }
            (_, single) => single,
        };
        self.transcript.round_mut().first_choice = Some(choice.clone());
        self.first = Some(choice);
        self.stage = Stage::Chosen;
        self.transcript.stage = Stage::Chosen;
        Ok(())
    }

    /// Stage 3: the host consults his notepad and names a door; the engine
    /// checks it and measures it.
    pub fn host_open_door(&mut self) -> Result<DoorOutcome, EngineError> {
        if self.rules.variant == Variant::OpenPlayersDoor {
            self.expect_stage(Stage::Prepared, "prepared")?;
        } else {
            self.expect_stage(Stage::Chosen, "chosen")?;
        }

        if let Some(plan) = self.host.consultation_plan(self.first.as_ref(), &mut self.rng) {
            let PrizeState::Joint(joint) = &self.prize else {
                return Err(EngineError::Config("notepad measurement needs an entangled prize".into()));
            };
            let (outcome, post) = joint.measure_notepad(&plan.povm, &mut self.rng);
            self.prize = PrizeState::Joint(post);
            self.notepad = Notepad::Quantum {
                consultation: Some(Consultation {
                    povm: plan.povm,
                    basis: plan.basis,
                    outcome,
                }),
            };
            self.transcript.round_mut().notepad_outcome = Some(outcome);
        }

        let request = DoorRequest {
            notepad: &self.notepad,
            first: self.first.as_ref(),
            rules: &self.rules,
        };
        let pick = self.host.pick_door(request, &mut self.rng)?;
        self.transcript.round_mut().degenerate_door = pick.degenerate;
        let q = pick.chi.projector();
        self.check_door(&q)?;

        if let Some((q1, q2)) = pick.vn_pair {
            return self.open_with_basis([q, q1.projector(), q2.projector()]);
        }

        let (hit, post) = self.prize.measure(&q, &mut self.rng);
        let announced = self.announce(&q);
        self.transcript.round_mut().door_hit = Some(hit);
        if !hit {
            self.prize = post;
            self.door = Some(q);
            self.stage = Stage::Opened;
            self.transcript.stage = Stage::Opened;
            if self.rules.variant == Variant::TouchAllowed {
                self.apply_variant_touch()?;
            }
            return Ok(DoorOutcome::Opened { announced });
        }
        match self.rules.variant {
            Variant::RevealWins => {
                self.prize = post;
                self.door = Some(q);
                self.finish(true);
                Ok(DoorOutcome::RevealedPrize { announced })
            }
            Variant::RestartOnReveal => {
                self.restart_count += 1;
                self.transcript.restarts = self.restart_count;
                if self.restart_count > self.rules.restart_cap {
                    self.abort();
                    return Ok(DoorOutcome::Aborted {
                        restarts: self.restart_count,
                    });
                }
                self.prepare();
                Ok(DoorOutcome::Restarted {
                    restarts: self.restart_count,
                })
            }
            _ => {
                self.abort();
                Err(EngineError::HostViolation(format!(
                    "door {} revealed the prize",
                    self.host.label()
                )))
            }
        }
    }

    /// `q ⊥ p`, and under `triple_choice` `q ∈ {p′, p″}`.
    fn check_door(&mut self, q: &Projector) -> Result<(), EngineError> {
        let Some(first) = &self.first else {
            return Ok(());
        };
        let overlap = q.overlap(first.primary());
        if overlap > EPSILON {
            self.abort();
            return Err(EngineError::RuleViolation(format!(
                "opened door overlaps the player's door: tr(pq) = {overlap:.3e}"
            )));
        }
        if let Some(alternatives) = first.alternatives() {
            if !alternatives.iter().any(|alt| alt.distance(q) < EPSILON) {
                self.abort();
                return Err(EngineError::RuleViolation(
                    "under triple_choice the opened door must be one of the other two".into(),
                ));
            }
        }
        Ok(())
    }

    fn announce(&mut self, q: &Projector) -> Announcement {
        let announced = match self.rules.announce_precision_digits {
            None => Announcement::exact(q.ket()),
            Some(d) => Announcement::truncated(q.ket(), d),
        };
        self.announcement = Some(announced.clone());
        self.transcript.round_mut().announced = Some(announced.clone());
        announced
    }

    /// Stage 3 under `complete_vn`: the host measures the prize in the
    /// basis `(q, q′, q″)` and announces only `q`. `q` must miss both the
    /// player's door and the public prize.
    pub fn apply_variant_complete_vn(&mut self, basis: [Projector; 3]) -> Result<DoorOutcome, EngineError> {
        if self.rules.variant != Variant::CompleteVn {
            return Err(EngineError::RuleViolation("not a complete_vn session".into()));
        }
        self.expect_stage(Stage::Chosen, "chosen")?;
        self.check_door(&basis[0])?;
        self.open_with_basis(basis)
    }

    fn open_with_basis(&mut self, basis: [Projector; 3]) -> Result<DoorOutcome, EngineError> {
        let sum: Mat3 = basis.iter().map(|b| b.matrix()).sum();
        let defect = max_abs(&(sum - Mat3::identity()));
        if defect > EPSILON {
            self.abort();
            return Err(EngineError::RuleViolation(format!(
                "von Neumann basis does not resolve the identity (defect {defect:.3e})"
            )));
        }
        let [q, q1, q2] = basis;
        let on_door = self.prize.probability(&q);
        if on_door > EPSILON {
            self.abort();
            return Err(EngineError::RuleViolation(format!(
                "opened door overlaps the public prize: {on_door:.3e}"
            )));
        }
        let (w1, w2) = (self.prize.probability(&q1), self.prize.probability(&q2));
        let first = self.rng.random::<f64>() * (w1 + w2) < w1;
        let fired = if first { &q1 } else { &q2 };
        self.prize = PrizeState::Pure(fired.ket().clone());
        let announced = self.announce(&q);
        let round = self.transcript.round_mut();
        round.vn_outcome = Some(if first { 1 } else { 2 });
        round.door_hit = Some(false);
        self.door = Some(q);
        self.stage = Stage::Opened;
        self.transcript.stage = Stage::Opened;
        Ok(DoorOutcome::Opened { announced })
    }

    /// After opening under `touch_allowed`: the host equalizes the prize
    /// over the two closed doors, leaving `(1 − q)/2`.
    pub fn apply_variant_touch(&mut self) -> Result<(), EngineError> {
        if self.rules.variant != Variant::TouchAllowed {
            return Err(EngineError::RuleViolation("not a touch_allowed session".into()));
        }
        self.expect_stage(Stage::Opened, "opened")?;
        let q = self.door.as_ref().expect("opened sessions have a door");
        let equalized = (Mat3::identity() - q.matrix()).scale(0.5);
        self.prize = PrizeState::Mixed(crate::hilbert::DensityOperator::new(equalized)?);
        self.transcript.round_mut().touched = true;
        Ok(())
    }

    /// Stage 4: measure the final door. The door must be orthogonal to the
    /// opened one, within the rules' tolerance.
    pub fn player_final(&mut self, p_prime: &Projector) -> Result<bool, EngineError> {
        self.expect_stage(Stage::Opened, "opened")?;
        let q = self.door.as_ref().expect("opened sessions have a door");
        let overlap = p_prime.overlap(q);
        let tolerance = self.rules.orthogonality_tolerance();
        if overlap > tolerance {
            return Err(EngineError::RuleViolation(format!(
                "final door overlaps the opened door: tr(p'q) = {overlap:.3e} > {tolerance:.1e}"
            )));
        }
        let (hit, post) = self.prize.measure(p_prime, &mut self.rng);
        self.prize = post;
        self.final_door = Some(p_prime.clone());
        self.transcript.final_door = Some(p_prime.ket().clone());
        self.finish(hit);
        Ok(hit)
    }

    fn finish(&mut self, won: bool) {
        self.won = Some(won);
        self.stage = Stage::Finished;
        self.transcript.won = Some(won);
        self.transcript.stage = Stage::Finished;
    }

    pub fn rules(&self) -> &RuleSet {
        &self.rules
    }

    pub fn host(&self) -> &HostStrategy {
        &self.host
    }

    pub fn stage(&self) -> Stage {
        self.stage
    }

    pub fn prize_state(&self) -> &PrizeState {
        &self.prize
    }

    pub fn notepad(&self) -> &Notepad {
        &self.notepad
    }

    pub fn first_choice(&self) -> Option<&FirstChoice> {
        self.first.as_ref()
    }

    /// The opened door `q`, exactly.
    pub fn door(&self) -> Option<&Projector> {
        self.door.as_ref()
    }

    pub fn announcement(&self) -> Option<&Announcement> {
        self.announcement.as_ref()
    }

    pub fn final_door(&self) -> Option<&Projector> {
        self.final_door.as_ref()
    }

    pub fn won(&self) -> Option<bool> {
        self.won
    }

    pub fn restart_count(&self) -> u32 {
        self.restart_count
    }

    pub fn transcript(&self) -> &Transcript {
        &self.transcript
    }

    /// Records that the player's strategy fell back to switching.
    pub fn note_fallback(&mut self, reason: impl Into<String>) {
        self.transcript.fallback = Some(reason.into());
    }
}

/// Replays a transcript against `host`: re-creates the session from the
/// recorded seed and stream and re-applies the recorded choices.
pub fn replay(transcript: &Transcript, host: impl Into<Arc<HostStrategy>>) -> Result<Transcript, EngineError> {
    let mut session = GameSession::new(
        transcript.rules.clone(),
        host,
        RandomStream::new(transcript.seed, transcript.stream),
    )?;
    for round in &transcript.rounds {
        if let Some(first) = &round.first_choice {
            session.player_choose(first.clone())?;
        }
        if round.door_hit.is_some() {
            session.host_open_door()?;
        }
    }
    if let Some(door) = &transcript.final_door {
        session.player_final(&door.projector())?;
    }
    let mut out = session.transcript().clone();
    out.fallback = transcript.fallback.clone();
    Ok(out)
}
