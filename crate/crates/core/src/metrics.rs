//! Confusion matrix and accuracy. Rows are ground truth, columns are predictions.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::keypoints::LabelMap;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    counts: Vec<Vec<u64>>,
    label_map: LabelMap,
}

impl ConfusionMatrix {
    pub fn new(label_map: LabelMap) -> Self {
        let c = label_map.len();
        ConfusionMatrix {
            counts: vec![vec![0; c]; c],
            label_map,
        }
    }

    pub fn record(&mut self, truth: usize, prediction: usize) -> Result<()> {
        let c = self.label_map.len();
        for idx in [truth, prediction] {
            if idx >= c {
                return Err(Error::UnknownLabel(format!("class index {idx}")));
            }
        }
        self.counts[truth][prediction] += 1;
        Ok(())
    }

    pub fn counts(&self) -> &[Vec<u64>] {
        &self.counts
    }

    pub fn label_map(&self) -> &LabelMap {
        &self.label_map
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.counts.len()).map(|i| self.counts[i][i]).sum()
    }

    pub fn row_sums(&self) -> Vec<u64> {
        self.counts.iter().map(|r| r.iter().sum()).collect()
    }

    pub fn column_sums(&self) -> Vec<u64> {
        let c = self.counts.len();
        (0..c).map(|j| self.counts.iter().map(|r| r[j]).sum()).collect()
    }
}

pub fn confusion(pairs: &[(usize, usize)], label_map: &LabelMap) -> Result<ConfusionMatrix> {
    let mut cm = ConfusionMatrix::new(label_map.clone());
    for &(t, p) in pairs {
        cm.record(t, p)?;
    }
    Ok(cm)
}

pub fn accuracy(cm: &ConfusionMatrix) -> Result<f64> {
    match cm.total() {
        0 => Err(Error::EmptyMatrix),
        total => Ok(cm.trace() as f64 / total as f64),
    }
}

/// Diagonal over row sum per class; `None` for classes that never occur as ground truth.
pub fn per_class_accuracy(cm: &ConfusionMatrix) -> Vec<Option<f64>> {
    cm.counts
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let n: u64 = row.iter().sum();
            (n > 0).then(|| row[i] as f64 / n as f64)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub confusion: ConfusionMatrix,
    /// `None` when nothing was evaluated.
    pub accuracy: Option<f64>,
    pub per_class: Vec<Option<f64>>,
}

impl MetricsReport {
    pub fn from_confusion(confusion: ConfusionMatrix) -> Self {
        MetricsReport {
            accuracy: accuracy(&confusion).ok(),
            per_class: per_class_accuracy(&confusion),
            confusion,
        }
    }
}
