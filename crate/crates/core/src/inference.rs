//! Window classification, streaming prediction, and video-level labels.
//!
//! A video is labeled by discarding static actions and picking the dynamic
//! action with the longest consecutive run of window predictions. If no
//! dynamic action was predicted at all, the most frequent static action wins.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::grunet::{argmax, softmax, GruNetwork};
use crate::keypoints::{ActionLabel, LabelMap, PoseFrame, SampleSequence};
use crate::normalize::{normalize_frame_with, normalize_sequence_with, Normalization};
use crate::sampler::{split_by_interval, IntervalConfig, StreamWindow};

pub const DEFAULT_STATIC: [&str; 3] = ["stand", "sit", "others"];

#[derive(Debug, Clone, PartialEq)]
pub struct WindowPrediction {
    pub label: ActionLabel,
    pub probabilities: Vec<f64>,
    /// Frame index of the newest frame in the window.
    pub window_end_index: usize,
}

/// Labels treated as static when aggregating a video.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct StaticSet {
    names: BTreeSet<String>,
}

impl StaticSet {
    pub fn new<S: AsRef<str>>(names: &[S], label_map: &LabelMap) -> Result<Self> {
        let mut set = BTreeSet::new();
        for name in names {
            let name = name.as_ref();
            if label_map.index_of(name).is_none() {
                return Err(Error::UnknownLabel(name.to_string()));
            }
            set.insert(name.to_string());
        }
        Ok(StaticSet { names: set })
    }

    /// `stand`, `sit` and `others`, restricted to the labels `label_map` has.
    pub fn default_for(label_map: &LabelMap) -> Self {
        StaticSet {
            names: DEFAULT_STATIC
                .iter()
                .filter(|n| label_map.index_of(n).is_some())
                .map(|n| n.to_string())
                .collect(),
        }
    }

    pub fn contains(&self, name: &str) -> bool {
        self.names.contains(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.names.iter().map(String::as_str)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Aggregation {
    /// Longest consecutive run of one dynamic label; earlier run wins ties.
    #[default]
    LongestRun,
    /// Largest total count of one dynamic label; earlier first occurrence wins ties.
    MostFrequent,
    /// Highest mean probability among labels that were predicted at least once.
    MeanProbability,
}

pub fn classify_window(
    net: &GruNetwork,
    label_map: &LabelMap,
    seq: &SampleSequence,
    window_end_index: usize,
) -> Result<WindowPrediction> {
    if net.dims().num_classes != label_map.len() {
        return Err(Error::DimensionMismatch {
            what: "label map size",
            expected: net.dims().num_classes,
            got: label_map.len(),
        });
    }
    let probabilities = softmax(&net.logits(&seq.vectors)?);
    let index = argmax(&probabilities);
    Ok(WindowPrediction {
        label: label_map.label(index).expect("index below class count"),
        probabilities,
        window_end_index,
    })
}

pub fn aggregate_video(predictions: &[WindowPrediction], static_set: &StaticSet) -> Option<ActionLabel> {
    aggregate_video_with(predictions, static_set, Aggregation::LongestRun)
}

pub fn aggregate_video_with(
    predictions: &[WindowPrediction],
    static_set: &StaticSet,
    mode: Aggregation,
) -> Option<ActionLabel> {
    if predictions.is_empty() {
        return None;
    }
    let is_dynamic = |p: &WindowPrediction| !static_set.contains(&p.label.name);

    match mode {
        Aggregation::LongestRun => {
            let mut best: Option<(usize, &ActionLabel)> = None;
            let mut i = 0;
            while i < predictions.len() {
                let label = &predictions[i].label;
                let run = predictions[i..]
                    .iter()
                    .take_while(|p| p.label.index == label.index)
                    .count();
                if is_dynamic(&predictions[i]) && best.is_none_or(|(len, _)| run > len) {
                    best = Some((run, label));
                }
                i += run;
            }
            if let Some((_, label)) = best {
                return Some(label.clone());
            }
        }
        Aggregation::MostFrequent => {
            let mut best: Option<(usize, &ActionLabel)> = None;
            let mut seen = BTreeSet::new();
            for p in predictions.iter().filter(|p| is_dynamic(p)) {
                if !seen.insert(p.label.index) {
                    continue;
                }
                let count = predictions.iter().filter(|q| q.label.index == p.label.index).count();
                if best.is_none_or(|(c, _)| count > c) {
                    best = Some((count, &p.label));
                }
            }
            if let Some((_, label)) = best {
                return Some(label.clone());
            }
        }
        Aggregation::MeanProbability => {
            let classes = predictions[0].probabilities.len();
            let mut mean = vec![0.0; classes];
            for p in predictions {
                for (m, v) in mean.iter_mut().zip(&p.probabilities) {
                    *m += v;
                }
            }
            let mut best: Option<&ActionLabel> = None;
            for p in predictions {
                let better = match best {
                    None => true,
                    Some(b) => {
                        let (a, c) = (mean[p.label.index], mean[b.index]);
                        a > c || (a == c && p.label.index < b.index)
                    }
                };
                if better {
                    best = Some(&p.label);
                }
            }
            return best.cloned();
        }
    }

    // No dynamic label: most frequent static label, smallest index on ties.
    let mut counts: Vec<(usize, usize, &ActionLabel)> = Vec::new();
    for p in predictions {
        match counts.iter_mut().find(|(idx, _, _)| *idx == p.label.index) {
            Some(entry) => entry.1 += 1,
            None => counts.push((p.label.index, 1, &p.label)),
        }
    }
    counts
        .into_iter()
        .max_by(|a, b| a.1.cmp(&b.1).then(b.0.cmp(&a.0)))
        .map(|(_, _, label)| label.clone())
}

/// Options for labeling a whole clip offline.
#[derive(Debug, Clone)]
pub struct ClipPredictionConfig {
    pub interval: IntervalConfig,
    pub normalization: Normalization,
    pub static_set: StaticSet,
    pub aggregation: Aggregation,
}

/// Normalizes `frames`, splits them by interval, classifies every
/// subsequence and aggregates. A clip too short for the interval is
/// classified as one dense sequence.
pub fn predict_clip(
    net: &GruNetwork,
    label_map: &LabelMap,
    frames: &[PoseFrame],
    cfg: &ClipPredictionConfig,
) -> Result<(ActionLabel, Vec<WindowPrediction>)> {
    if frames.is_empty() {
        return Err(Error::InvalidConfig("clip has no frames".into()));
    }
    let vectors = normalize_sequence_with(frames, cfg.normalization);
    let k = cfg.interval.interval;
    let whole = SampleSequence::new(vectors, None);
    let windows: Vec<(SampleSequence, usize)> = match split_by_interval(&whole, cfg.interval) {
        Ok(parts) => parts
            .into_iter()
            .enumerate()
            .map(|(offset, s)| {
                let end = offset + (s.len() - 1) * k;
                (s, end)
            })
            .collect(),
        Err(Error::EmptyResult { .. }) => {
            let end = whole.len() - 1;
            vec![(whole, end)]
        }
        Err(e) => return Err(e),
    };
    let predictions = windows
        .iter()
        .map(|(s, end)| classify_window(net, label_map, s, *end))
        .collect::<Result<Vec<_>>>()?;
    let label = aggregate_video_with(&predictions, &cfg.static_set, cfg.aggregation)
        .expect("at least one window");
    Ok((label, predictions))
}

/// Per-feed streaming state around a shared, read-only network.
#[derive(Debug, Clone)]
pub struct StreamClassifier<'a> {
    net: &'a GruNetwork,
    label_map: &'a LabelMap,
    window: StreamWindow,
    normalization: Normalization,
    emit_stride: usize,
    frames_seen: usize,
}

impl<'a> StreamClassifier<'a> {
    pub fn new(
        net: &'a GruNetwork,
        label_map: &'a LabelMap,
        window: StreamWindow,
        normalization: Normalization,
        emit_stride: usize,
    ) -> Result<Self> {
        if emit_stride == 0 {
            return Err(Error::InvalidConfig("emit stride must be at least 1".into()));
        }
        if net.dims().num_classes != label_map.len() {
            return Err(Error::InvalidConfig(format!(
                "network has {} classes but the label map has {}",
                net.dims().num_classes,
                label_map.len()
            )));
        }
        Ok(StreamClassifier {
            net,
            label_map,
            window,
            normalization,
            emit_stride,
            frames_seen: 0,
        })
    }

    pub fn window(&self) -> &StreamWindow {
        &self.window
    }

    pub fn frames_seen(&self) -> usize {
        self.frames_seen
    }

    /// Pushes one frame. Returns a prediction on the push that fills the
    /// window and on every `emit_stride`-th push after that.
    pub fn step(&mut self, frame: &PoseFrame) -> Result<Option<WindowPrediction>> {
        let index = self.frames_seen;
        self.frames_seen += 1;
        // Degenerate frames enter as zero vectors so timing stays aligned.
        self.window.push(normalize_frame_with(frame, self.normalization).vector);
        let first_full = self.window.capacity() - 1;
        if index < first_full || !(index - first_full).is_multiple_of(self.emit_stride) {
            return Ok(None);
        }
        match self.window.emit() {
            Some(seq) => classify_window(self.net, self.label_map, &seq, index).map(Some),
            None => Ok(None),
        }
    }
}
