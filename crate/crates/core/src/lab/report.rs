use std::io::Write;

use serde::{Deserialize, Serialize};

use super::{analytic_value, ExperimentConfig, LabError, WinStats};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportFormat {
    #[default]
    Csv,
    Json,
}

impl std::str::FromStr for ReportFormat {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            other => Err(format!("unknown report format {other:?}")),
        }
    }
}

/// One report line. Field order is the column order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub host: String,
    pub player: String,
    pub rules: String,
    pub trials: u64,
    pub seed: u64,
    pub estimate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub analytic: Option<f64>,
    pub abs_error: Option<f64>,
}

impl ReportRow {
    pub fn new(config: &ExperimentConfig, stats: &WinStats) -> Self {
        Self::with_analytic(
            config.host.label(),
            config.player.label(),
            config.rules.label(),
            stats,
            analytic_value(&config.host, &config.player, &config.rules),
        )
    }

    pub fn with_analytic(host: String, player: String, rules: String, stats: &WinStats, analytic: Option<f64>) -> Self {
        Self {
            host,
            player,
            rules,
            trials: stats.trials,
            seed: stats.seed,
            estimate: stats.estimate,
            ci_low: stats.ci_low,
            ci_high: stats.ci_high,
            analytic,
            abs_error: analytic.map(|a| (stats.estimate - a).abs()),
        }
    }
}

/// Writes the rows as CSV with a header line, or as a JSON array.
pub fn emit_report<W: Write>(rows: &[ReportRow], format: ReportFormat, writer: W) -> Result<(), LabError> {
    let err = |e: &dyn std::fmt::Display| LabError::Report(e.to_string());
    match format {
        ReportFormat::Csv => {
            let mut w = csv::Writer::from_writer(writer);
            for row in rows {
                w.serialize(row).map_err(|e| err(&e))?;
            }
            if rows.is_empty() {
                w.write_record([
                    "host", "player", "rules", "trials", "seed", "estimate", "ci_low", "ci_high", "analytic",
                    "abs_error",
                ])
                .map_err(|e| err(&e))?;
            }
            w.flush().map_err(|e| err(&e))
        }
        ReportFormat::Json => {
            let mut writer = writer;
            serde_json::to_writer_pretty(&mut writer, rows).map_err(|e| err(&e))?;
            writeln!(writer).map_err(|e| err(&e))
        }
    }
}

pub fn render_report(rows: &[ReportRow], format: ReportFormat) -> Result<String, LabError> {
    let mut buf = Vec::new();
    emit_report(rows, format, &mut buf)?;
    String::from_utf8(buf).map_err(|e| LabError::Report(e.to_string()))
}

pub fn parse_csv_report(text: &str) -> Result<Vec<ReportRow>, LabError> {
    csv::Reader::from_reader(text.as_bytes())
        .deserialize()
        .collect::<Result<Vec<ReportRow>, _>>()
        .map_err(|e| LabError::Report(e.to_string()))
}
