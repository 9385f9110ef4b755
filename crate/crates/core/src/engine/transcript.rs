use serde::{Deserialize, Serialize};

use super::{Announcement, FirstChoice, RuleSet, Stage};
use crate::hilbert::StateVector;

/// Complete record of one session. A session that restarts gets one
/// [`Round`] per preparation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transcript {
    pub rules: RuleSet,
    pub host: String,
    pub seed: u64,
    pub stream: u64,
    pub rounds: Vec<Round>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub final_door: Option<StateVector>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub won: Option<bool>,
    pub restarts: u32,
    pub stage: Stage,
    /// Set by the player side when its strategy fell back to switching.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fallback: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Round {
    /// Prepared prize vector, for hosts that keep a classical record.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prepared: Option<StateVector>,
    /// Catalog index of the prepared vector.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub catalog_index: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub first_choice: Option<FirstChoice>,
    /// Outcome of the quantum notepad measurement.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub notepad_outcome: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub announced: Option<Announcement>,
    /// The degeneracy policy chose the door.
    #[serde(default)]
    pub degenerate_door: bool,
    /// Whether the stage-3 measurement found the prize.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub door_hit: Option<bool>,
    /// Which of `q′`, `q″` fired in a complete von Neumann opening (1 or 2).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vn_outcome: Option<usize>,
    #[serde(default)]
    pub touched: bool,
}

impl Transcript {
    pub(crate) fn new(rules: RuleSet, host: String, seed: u64, stream: u64) -> Self {
        Self {
            rules,
            host,
            seed,
            stream,
            rounds: Vec::new(),
            final_door: None,
            won: None,
            restarts: 0,
            stage: Stage::Prepared,
            fallback: None,
        }
    }

    pub fn current(&self) -> Option<&Round> {
        self.rounds.last()
    }

    pub(crate) fn round_mut(&mut self) -> &mut Round {
        if self.rounds.is_empty() {
            self.rounds.push(Round::default());
        }
        self.rounds.last_mut().expect("non-empty")
    }

    pub fn is_complete(&self) -> bool {
        self.stage == Stage::Finished && self.won.is_some()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("transcripts serialize")
    }
}
