//! Monte Carlo experiments and closed-form oracles.
//!
//! Trial `i` of a run with seed `s` plays on the engine stream
//! `RandomStream::engine(s, i)` and the player stream
//! `RandomStream::player(s, i)`, so results do not depend on how trials are
//! spread over threads.

mod explore;
mod oracle;
mod report;
mod run;
mod stats;

pub use explore::{best_response_probe, theta_sweep, HostFamily, ProbeBudget, ProbeEntry, ProbeResult, SweepPoint};
pub use oracle::{analytic_value, mean_density_estimate, sweep_prediction, ConditionalModel};
pub use report::{emit_report, parse_csv_report, render_report, ReportFormat, ReportRow};
pub use run::{play_game, run_experiment, run_trials, ExperimentConfig, RunOutcome};
pub use stats::{wilson_interval, WinStats, WILSON_Z};

use crate::engine::EngineError;

/// Errors raised by the lab.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LabError {
    #[error("invalid experiment: {0}")]
    Config(String),
    #[error("host violation in trial {trial} (seed {seed}): {message}")]
    HostViolation { trial: u64, seed: u64, message: String },
    #[error("trial {trial} (seed {seed}) failed: {source}")]
    Engine {
        trial: u64,
        seed: u64,
        #[source]
        source: EngineError,
    },
    #[error("report error: {0}")]
    Report(String),
}
