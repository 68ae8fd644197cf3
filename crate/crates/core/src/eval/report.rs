use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::MetricsReport;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Markdown,
    Csv,
    Json,
}

impl std::str::FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "markdown" | "md" => Ok(ReportFormat::Markdown),
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            other => Err(Error::InvalidArgument(format!(
                "unknown report format \"{other}\""
            ))),
        }
    }
}

/// Header of the CSV report. Metric values are written at full precision;
/// `auc` is empty when undefined.
pub const CSV_COLUMNS: [&str; 14] = [
    "model",
    "dataset",
    "augmented",
    "k",
    "seed",
    "n_evaluated",
    "precision_false",
    "precision_true",
    "recall_false",
    "recall_true",
    "f1_false",
    "f1_true",
    "accuracy",
    "auc",
];

const MARKDOWN_HEADER: [&str; 6] = [
    "Model",
    "Precision (False/True)",
    "Recall (False/True)",
    "F1-score (False/True)",
    "Accuracy",
    "AUC",
];

/// One row per report, pairing false/true values per metric.
pub fn render_report(reports: &[MetricsReport], format: ReportFormat) -> Result<String> {
    match format {
        ReportFormat::Json => Ok(serde_json::to_string_pretty(reports)?),
        ReportFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(CSV_COLUMNS)?;
            for r in reports {
                w.write_record([
                    r.model.clone(),
                    r.dataset.clone(),
                    r.augmented.to_string(),
                    r.k.to_string(),
                    r.seed.to_string(),
                    r.n_evaluated.to_string(),
                    r.fake.precision.to_string(),
                    r.truth.precision.to_string(),
                    r.fake.recall.to_string(),
                    r.truth.recall.to_string(),
                    r.fake.f1.to_string(),
                    r.truth.f1.to_string(),
                    r.accuracy.to_string(),
                    r.auc.map(|v| v.to_string()).unwrap_or_default(),
                ])?;
            }
            let bytes = w
                .into_inner()
                .map_err(|e| Error::InvalidArgument(e.to_string()))?;
            Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
        }
        ReportFormat::Markdown => {
            let mut out = String::new();
            let _ = writeln!(out, "| {} |", MARKDOWN_HEADER.join(" | "));
            let _ = writeln!(out, "|{}", "---|".repeat(MARKDOWN_HEADER.len()));
            for r in reports {
                let name = if r.augmented {
                    format!("{} (augmented)", r.model)
                } else {
                    r.model.clone()
                };
                let _ = writeln!(
                    out,
                    "| {} | {:.2}/{:.2} | {:.2}/{:.2} | {:.2}/{:.2} | {:.2} | {} |",
                    name.replace('|', "\\|"),
                    r.fake.precision,
                    r.truth.precision,
                    r.fake.recall,
                    r.truth.recall,
                    r.fake.f1,
                    r.truth.f1,
                    r.accuracy,
                    r.auc
                        .map(|v| format!("{v:.2}"))
                        .unwrap_or_else(|| "n/a".into())
                );
            }
            Ok(out)
        }
    }
}

/// Parses the JSON form written by [`render_report`].
pub fn read_reports(json: &str) -> Result<Vec<MetricsReport>> {
    Ok(serde_json::from_str(json)?)
}
