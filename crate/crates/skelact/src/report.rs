//! Output records: metrics reports, training history, and streaming predictions.
//!
//! * Metrics CSV: a header of class names, then one row of counts per true
//!   class in label order (rows = truth, columns = prediction).
//! * Metrics JSON: `{"label_map", "confusion", "total", "accuracy", "per_class"}`;
//!   `accuracy` is `null` for an empty matrix and a `per_class` entry is `null`
//!   for a class with no clips.
//! * History: one JSON object per line, `{"epoch", "train_loss",
//!   "train_accuracy", "val_accuracy"}`.
//! * Streaming: one `{"frame_index", "label", "probabilities"}` line per
//!   prediction, then `{"video_label": name or null, "predictions": n}`.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use skelact_core::inference::WindowPrediction;
use skelact_core::metrics::MetricsReport;
use skelact_core::trainer::{EpochRecord, TrainHistory};
use skelact_core::ActionLabel;

use crate::error::{IoError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub label_map: Vec<String>,
    pub confusion: Vec<Vec<u64>>,
    pub total: u64,
    pub accuracy: Option<f64>,
    pub per_class: Vec<Option<f64>>,
}

impl From<&MetricsReport> for MetricsRecord {
    fn from(r: &MetricsReport) -> Self {
        MetricsRecord {
            label_map: r.confusion.label_map().names().to_vec(),
            confusion: r.confusion.counts().to_vec(),
            total: r.confusion.total(),
            accuracy: r.accuracy,
            per_class: r.per_class.clone(),
        }
    }
}

pub fn metrics_csv(report: &MetricsReport) -> String {
    let mut out = report.confusion.label_map().names().join(",");
    out.push('\n');
    for row in report.confusion.counts() {
        let cells: Vec<String> = row.iter().map(u64::to_string).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

pub fn metrics_json(report: &MetricsReport) -> String {
    serde_json::to_string_pretty(&MetricsRecord::from(report)).expect("serializable") + "\n"
}

/// Writes `<stem>.csv` and `<stem>.json` next to each other; returns both paths.
pub fn write_metrics(report: &MetricsReport, stem: impl AsRef<Path>) -> Result<[std::path::PathBuf; 2]> {
    let stem = stem.as_ref();
    let csv = stem.with_extension("csv");
    let json = stem.with_extension("json");
    fs::write(&csv, metrics_csv(report)).map_err(|e| IoError::io(&csv, e))?;
    fs::write(&json, metrics_json(report)).map_err(|e| IoError::io(&json, e))?;
    Ok([csv, json])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochLine {
    pub epoch: usize,
    pub train_loss: f64,
    pub train_accuracy: f64,
    pub val_accuracy: Option<f64>,
}

impl From<&EpochRecord> for EpochLine {
    fn from(r: &EpochRecord) -> Self {
        EpochLine {
            epoch: r.epoch,
            train_loss: r.train_loss,
            train_accuracy: r.train_accuracy,
            val_accuracy: r.val_accuracy,
        }
    }
}

pub fn history_jsonl(history: &TrainHistory) -> String {
    history
        .epochs
        .iter()
        .map(|r| serde_json::to_string(&EpochLine::from(r)).expect("serializable") + "\n")
        .collect()
}

pub fn write_history(history: &TrainHistory, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, history_jsonl(history)).map_err(|e| IoError::io(path, e))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StreamRecord {
    pub frame_index: usize,
    pub label: String,
    pub probabilities: Vec<f64>,
}

impl From<&WindowPrediction> for StreamRecord {
    fn from(p: &WindowPrediction) -> Self {
        StreamRecord {
            frame_index: p.window_end_index,
            label: p.label.name.clone(),
            probabilities: p.probabilities.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VideoRecord {
    pub video_label: Option<String>,
    pub predictions: usize,
}

pub fn stream_line(p: &WindowPrediction) -> String {
    serde_json::to_string(&StreamRecord::from(p)).expect("serializable")
}

pub fn video_line(label: Option<&ActionLabel>, predictions: usize) -> String {
    serde_json::to_string(&VideoRecord {
        video_label: label.map(|l| l.name.clone()),
        predictions,
    })
    .expect("serializable")
}
