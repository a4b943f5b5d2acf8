//! The three-way ablation: dense sampling without centroid re-origin,
//! interval sampling without it, and interval sampling with full
//! normalization. All three share one trainer, one split, and one seed.

use skelact_core::trainer::{evaluate, split_dataset, train_partitions, TrainConfig, TrainHistory};
use skelact_core::{Dataset, IntervalConfig, Normalization};

use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    DenseBaseline,
    SamplingOnly,
    SamplingNorm,
}

impl Variant {
    pub const ALL: [Variant; 3] = [Variant::DenseBaseline, Variant::SamplingOnly, Variant::SamplingNorm];

    pub fn name(self) -> &'static str {
        match self {
            Variant::DenseBaseline => "dense-baseline",
            Variant::SamplingOnly => "sampling-only",
            Variant::SamplingNorm => "sampling+norm",
        }
    }

    /// `base` with this variant's interval and normalization.
    pub fn configure(self, base: &TrainConfig) -> Result<TrainConfig> {
        let mut cfg = base.clone();
        match self {
            Variant::DenseBaseline => {
                cfg.interval = IntervalConfig::new(1, base.interval.min_len)?;
                cfg.normalization = Normalization::ScaleOnly;
            }
            Variant::SamplingOnly => cfg.normalization = Normalization::ScaleOnly,
            Variant::SamplingNorm => cfg.normalization = Normalization::Full,
        }
        Ok(cfg)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AblationRow {
    pub variant: Variant,
    pub interval: usize,
    pub normalization: Normalization,
    pub test_accuracy: f64,
    pub test_clips: u64,
    pub history: TrainHistory,
}

/// Trains every variant on the same split of `dataset` and scores it on the
/// held-out test clips.
pub fn run_ablation(dataset: &Dataset, base: &TrainConfig) -> Result<Vec<AblationRow>> {
    base.validate()?;
    let split = split_dataset(dataset, base.fractions, base.seed)?;
    let (train_set, val_set, test_set) = (
        dataset.subset(&split.train),
        dataset.subset(&split.val),
        dataset.subset(&split.test),
    );
    Variant::ALL
        .iter()
        .map(|&variant| {
            let cfg = variant.configure(base)?;
            let outcome = train_partitions(&train_set, &val_set, &cfg)?;
            let report = evaluate(&outcome.net, &test_set, &cfg.clip_prediction(dataset))?;
            Ok(AblationRow {
                variant,
                interval: cfg.interval.interval,
                normalization: cfg.normalization,
                test_accuracy: report.accuracy.unwrap_or(0.0),
                test_clips: report.confusion.total(),
                history: outcome.history,
            })
        })
        .collect()
}

pub fn format_table(rows: &[AblationRow]) -> String {
    let mut out = format!("{:<16} {:>8} {:>13} {:>13}\n", "config", "interval", "normalization", "test_accuracy");
    for r in rows {
        let norm = match r.normalization {
            Normalization::Full => "full",
            Normalization::ScaleOnly => "scale-only",
        };
        out.push_str(&format!(
            "{:<16} {:>8} {:>13} {:>13.4}\n",
            r.variant.name(),
            r.interval,
            norm,
            r.test_accuracy
        ));
    }
    out
}
