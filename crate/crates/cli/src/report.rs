//! CSV reports produced by `analyze`.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use curvecast::analysis::{fitts_by_group, summarize, throughput, AnalysisError, GroupKey, GroupValue};
use curvecast::experiment::{format_sig9, TrialRecord};
use curvecast::geometry::DisplayGeometry;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Report {
    Throughput,
    Summary,
    Fitts,
    Plot,
}

impl FromStr for Report {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "throughput" => Ok(Report::Throughput),
            "summary" => Ok(Report::Summary),
            "fitts" => Ok(Report::Fitts),
            "plot" => Ok(Report::Plot),
            _ => Err(format!("unknown report '{s}' (expected throughput, summary, fitts or plot)")),
        }
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Report::Throughput => "throughput",
            Report::Summary => "summary",
            Report::Fitts => "fitts",
            Report::Plot => "plot",
        })
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ReportError {
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Usage(String),
}

fn key_names(keys: &[GroupKey]) -> Vec<String> {
    keys.iter().map(|k| k.name().to_string()).collect()
}

fn value_text(v: &GroupValue) -> String {
    v.to_string()
}

/// Writes the requested report. `keys` is ignored by `throughput`, which is
/// always per technique.
pub fn write<W: Write>(
    report: Report,
    records: &[TrialRecord],
    keys: &[GroupKey],
    geom: &DisplayGeometry<f64>,
    out: W,
) -> Result<Vec<String>, ReportError> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    let mut warnings = Vec::new();
    match report {
        Report::Throughput => {
            let tp = throughput(records, geom)?;
            w.write_record(["technique", "throughput_bps", "participants", "cells"])?;
            for t in &tp.techniques {
                let cells = tp.cells.iter().filter(|c| c.technique == t.technique).count();
                w.write_record([
                    t.technique.to_string(),
                    format_sig9(t.throughput_bps),
                    t.participants.to_string(),
                    cells.to_string(),
                ])?;
            }
            warnings = tp.warnings;
        }
        Report::Summary => {
            let mut header = key_names(keys);
            header.extend(["mean_mt_s", "mt_ci95_halfwidth", "ci_defined", "accuracy", "n_trials"].map(String::from));
            w.write_record(&header)?;
            for s in summarize(records, keys) {
                let mut row: Vec<String> = s.key.iter().map(|(_, v)| value_text(v)).collect();
                row.extend([
                    format_sig9(s.mean_mt_s),
                    format_sig9(s.mt_ci95_halfwidth),
                    s.ci_defined.to_string(),
                    format_sig9(s.accuracy),
                    s.n_trials.to_string(),
                ]);
                w.write_record(&row)?;
            }
        }
        Report::Fitts => {
            let mut header = key_names(keys);
            header.extend(["intercept_s", "slope_s_per_bit", "r_squared", "points"].map(String::from));
            w.write_record(&header)?;
            for g in fitts_by_group(records, keys)? {
                let mut row: Vec<String> = g.key.iter().map(|(_, v)| value_text(v)).collect();
                row.extend([
                    format_sig9(g.fit.intercept_s),
                    format_sig9(g.fit.slope_s_per_bit),
                    format_sig9(g.fit.r_squared),
                    g.points.len().to_string(),
                ]);
                w.write_record(&row)?;
            }
        }
        Report::Plot => {
            // The last grouping key is the x axis; any others name the series.
            let Some((x_key, series_keys)) = keys.split_last() else {
                return Err(ReportError::Usage("plot needs at least one --group key for the x axis".into()));
            };
            w.write_record(["series", x_key.name(), "mean_mt_s", "ci95"])?;
            for s in summarize(records, keys) {
                let (x, series) = s.key.split_last().expect("one value per key");
                let label = if series_keys.is_empty() {
                    "all".to_string()
                } else {
                    series.iter().map(|(k, v)| format!("{}={}", k.name(), value_text(v))).collect::<Vec<_>>().join(";")
                };
                w.write_record([label, value_text(&x.1), format_sig9(s.mean_mt_s), format_sig9(s.mt_ci95_halfwidth)])?;
            }
        }
    }
    w.flush()?;
    Ok(warnings)
}
