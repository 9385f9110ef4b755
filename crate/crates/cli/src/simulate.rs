//! `qmonty simulate`: batch experiments on the command line.

use std::io::Write;
use std::path::PathBuf;

use qmonty::engine::{RuleSet, Variant};
use qmonty::lab::{emit_report, run_experiment, ExperimentConfig, LabError, ReportFormat, ReportRow};
use qmonty::strategies::PlayerStrategy;

use crate::spec::{parse_grid, parse_host, parse_player};

#[derive(Debug, Clone, clap::Args)]
pub struct SimulateArgs {
    /// Host strategy: a name (axes, haar, real, finite:N, entangled, entangled-povm,
    /// ignore, complete-vn, aborting:T), inline JSON, or @file.json.
    #[arg(long, default_value = "haar")]
    pub host: String,
    /// Player strategy: stick, switch, cheat-finite, cheat-real, angle:THETA, bayes,
    /// inline JSON, or @file.json.
    #[arg(long, default_value = "switch")]
    pub player: String,
    /// Rule variant.
    #[arg(long, default_value = "strict")]
    pub rules: Variant,
    /// Number of games.
    #[arg(short = 'n', long = "trials", default_value_t = 100_000)]
    pub trials: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// csv or json.
    #[arg(long, default_value = "csv")]
    pub format: ReportFormat,
    /// Sweep the angle player over a grid (`a,b,c` or `start:stop:count`;
    /// `pi/8` style values allowed). Replaces --player.
    #[arg(long, conflicts_with = "player")]
    pub theta_sweep: Option<String>,
    /// Announce the opened door to this many significant digits.
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..=17))]
    pub digits: Option<u32>,
    /// Read the whole experiment from a JSON config file instead.
    #[arg(long, conflicts_with_all = ["host", "player", "rules", "trials", "seed", "theta_sweep", "digits"])]
    pub config: Option<PathBuf>,
    /// Write the report here instead of stdout.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, thiserror::Error)]
pub enum SimulateError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    HostViolation(String),
    #[error("{0}")]
    Failed(String),
}

impl SimulateError {
    pub fn exit_code(&self) -> i32 {
        match self {
            SimulateError::HostViolation(_) => 2,
            SimulateError::Usage(_) | SimulateError::Failed(_) => 1,
        }
    }
}

impl From<LabError> for SimulateError {
    fn from(e: LabError) -> Self {
        match e {
            LabError::Config(_) => SimulateError::Usage(e.to_string()),
            LabError::HostViolation { .. } => SimulateError::HostViolation(e.to_string()),
            LabError::Engine { .. } | LabError::Report(_) => SimulateError::Failed(e.to_string()),
        }
    }
}

/// The experiments the arguments describe, one per report row.
pub fn configs(args: &SimulateArgs) -> Result<(Vec<ExperimentConfig>, ReportFormat), SimulateError> {
    if let Some(path) = &args.config {
        let text = std::fs::read_to_string(path)
            .map_err(|e| SimulateError::Usage(format!("cannot read {}: {e}", path.display())))?;
        let config: ExperimentConfig =
            serde_json::from_str(&text).map_err(|e| SimulateError::Usage(format!("bad config: {e}")))?;
        let format = config.format;
        return Ok((vec![config], format));
    }
    let usage = |e: crate::spec::SpecError| SimulateError::Usage(e.0);
    let host = parse_host(&args.host, args.seed).map_err(usage)?;
    let mut rules = RuleSet::new(args.rules);
    if let Some(d) = args.digits {
        rules = rules.with_digits(d);
    }
    let players = match &args.theta_sweep {
        Some(grid) => parse_grid(grid).map_err(usage)?.into_iter().map(PlayerStrategy::angle).collect(),
        None => vec![parse_player(&args.player, &host, args.seed).map_err(usage)?],
    };
    let configs = players
        .into_iter()
        .map(|player| ExperimentConfig::new(host.clone(), player, rules.clone(), args.trials, args.seed))
        .collect();
    Ok((configs, args.format))
}

pub fn run(args: &SimulateArgs) -> Result<(Vec<ReportRow>, ReportFormat), SimulateError> {
    let (configs, format) = configs(args)?;
    let mut rows = Vec::with_capacity(configs.len());
    for config in &configs {
        let outcome = run_experiment(config)?;
        if outcome.fallbacks > 0 {
            tracing::warn!(
                player = %config.player.label(),
                fallbacks = outcome.fallbacks,
                "strategy could not apply in some games and switched instead"
            );
        }
        rows.push(ReportRow::new(config, &outcome.stats));
    }
    Ok((rows, format))
}

/// Runs the experiments and writes the report to stdout or `--output`.
pub fn simulate(args: &SimulateArgs) -> Result<(), SimulateError> {
    let (rows, format) = run(args)?;
    let io = |e: std::io::Error| SimulateError::Failed(e.to_string());
    match &args.output {
        Some(path) => {
            let file = std::fs::File::create(path).map_err(io)?;
            emit_report(&rows, format, std::io::BufWriter::new(file))?;
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            emit_report(&rows, format, &mut lock)?;
            lock.flush().map_err(io)?;
        }
    }
    Ok(())
}
