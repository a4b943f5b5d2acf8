//! Clip-level dataset splitting, mini-batch training, and evaluation.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::grunet::{
    argmax, softmax_cross_entropy, Gradients, GruNetwork, Mode, NetworkDims, DEFAULT_DROPOUT,
    DEFAULT_HIDDEN, NUM_DROPOUT,
};
use crate::inference::{predict_clip, Aggregation, ClipPredictionConfig, StaticSet};
use crate::keypoints::{Dataset, SampleSequence};
use crate::metrics::{ConfusionMatrix, MetricsReport};
use crate::normalize::{normalize_sequence_with, Normalization};
use crate::optim::{Optimizer, OptimizerKind};
use crate::sampler::{split_by_interval, IntervalConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub optimizer: OptimizerKind,
    pub batch_size: usize,
    pub interval: IntervalConfig,
    pub normalization: Normalization,
    pub hidden_dim: usize,
    pub dropout_rates: [f64; NUM_DROPOUT],
    pub seed: u64,
    /// Train, validation, test.
    pub fractions: [f64; 3],
    /// Inverse-frequency class weights in the loss.
    pub class_weighted: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 60,
            learning_rate: 1e-3,
            optimizer: OptimizerKind::ADAM,
            batch_size: 16,
            interval: IntervalConfig::with_interval(4).expect("valid"),
            normalization: Normalization::Full,
            hidden_dim: DEFAULT_HIDDEN,
            dropout_rates: [DEFAULT_DROPOUT; NUM_DROPOUT],
            seed: 7,
            fractions: [0.7, 0.15, 0.15],
            class_weighted: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        validate_fractions(&self.fractions)?;
        if self.batch_size == 0 {
            return Err(Error::InvalidConfig("batch size must be at least 1".into()));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::InvalidConfig("learning rate must be positive".into()));
        }
        if self.hidden_dim == 0 {
            return Err(Error::InvalidConfig("hidden size must be at least 1".into()));
        }
        IntervalConfig::new(self.interval.interval, self.interval.min_len)?;
        Ok(())
    }

    /// Preprocessing used for validation and for anything evaluating this model later.
    pub fn clip_prediction(&self, dataset: &Dataset) -> ClipPredictionConfig {
        ClipPredictionConfig {
            interval: self.interval,
            normalization: self.normalization,
            static_set: StaticSet::default_for(&dataset.label_map),
            aggregation: Aggregation::LongestRun,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    /// Fraction of training sequences whose train-mode prediction was right.
    pub train_accuracy: f64,
    pub val_accuracy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainHistory {
    pub epochs: Vec<EpochRecord>,
    /// Epoch whose parameters were returned, if any epoch ran.
    pub best_epoch: Option<usize>,
}

/// Clip indices per partition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

fn validate_fractions(fractions: &[f64; 3]) -> Result<()> {
    if fractions.iter().any(|f| !(f.is_finite() && *f >= 0.0)) {
        return Err(Error::InvalidConfig("split fractions must be non-negative".into()));
    }
    let sum: f64 = fractions.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidConfig(format!("split fractions sum to {sum}, not 1")));
    }
    Ok(())
}

/// Largest-remainder apportionment of `n` items; ties go to the earlier partition.
pub fn apportion(n: usize, fractions: &[f64; 3]) -> [usize; 3] {
    let exact: Vec<f64> = fractions.iter().map(|f| f * n as f64).collect();
    let mut sizes = [0usize; 3];
    for i in 0..3 {
        sizes[i] = libm::floor(exact[i] + 1e-9) as usize;
    }
    let mut left = n.saturating_sub(sizes.iter().sum());
    let mut order: Vec<usize> = (0..3).filter(|&i| fractions[i] > 0.0).collect();
    order.sort_by(|&a, &b| {
        let ra = exact[a] - sizes[a] as f64;
        let rb = exact[b] - sizes[b] as f64;
        rb.partial_cmp(&ra).unwrap_or(core::cmp::Ordering::Equal).then(a.cmp(&b))
    });
    for &i in order.iter().cycle() {
        if left == 0 {
            break;
        }
        sizes[i] += 1;
        left -= 1;
    }
    sizes
}

/// Splits clips, never sequences, into train/val/test. Each class is
/// apportioned separately (largest remainder) and shuffled under `seed`.
pub fn split_dataset(dataset: &Dataset, fractions: [f64; 3], seed: u64) -> Result<Split> {
    validate_fractions(&fractions)?;
    if dataset.clips.is_empty() {
        return Err(Error::InvalidConfig("dataset has no clips".into()));
    }
    let mut by_class: BTreeMap<Option<usize>, Vec<usize>> = BTreeMap::new();
    for (i, clip) in dataset.clips.iter().enumerate() {
        by_class.entry(clip.label).or_default().push(i);
    }
    let needed = fractions.iter().filter(|&&f| f > 0.0).count();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut split = Split {
        train: Vec::new(),
        val: Vec::new(),
        test: Vec::new(),
    };
    for (label, mut clips) in by_class {
        if clips.len() < needed {
            let class = match label {
                Some(l) => dataset.label_map.name(l).unwrap_or("?").to_string(),
                None => "<unlabeled>".to_string(),
            };
            return Err(Error::TooFewClips {
                class,
                clips: clips.len(),
                needed,
            });
        }
        clips.shuffle(&mut rng);
        let [a, b, _] = apportion(clips.len(), &fractions);
        split.train.extend_from_slice(&clips[..a]);
        split.val.extend_from_slice(&clips[a..a + b]);
        split.test.extend_from_slice(&clips[a + b..]);
    }
    split.train.sort_unstable();
    split.val.sort_unstable();
    split.test.sort_unstable();
    Ok(split)
}

#[derive(Debug, Clone)]
pub struct LabeledSequence {
    pub clip: usize,
    pub label: usize,
    pub sequence: SampleSequence,
}

/// Normalizes every labeled clip and splits it by interval.
pub fn training_sequences(
    dataset: &Dataset,
    interval: IntervalConfig,
    normalization: Normalization,
) -> Result<Vec<LabeledSequence>> {
    let mut out = Vec::new();
    for (i, clip) in dataset.clips.iter().enumerate() {
        let Some(label) = clip.label else { continue };
        let whole = SampleSequence::new(
            normalize_sequence_with(&clip.frames, normalization),
            dataset.label_map.label(label),
        );
        for sequence in split_by_interval(&whole, interval)? {
            out.push(LabeledSequence {
                clip: i,
                label,
                sequence,
            });
        }
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub net: GruNetwork,
    pub history: TrainHistory,
}

/// Splits `dataset` with `cfg.fractions` and trains on the training part,
/// selecting the epoch by validation accuracy.
pub fn train(dataset: &Dataset, cfg: &TrainConfig) -> Result<TrainOutcome> {
    let split = split_dataset(dataset, cfg.fractions, cfg.seed)?;
    train_partitions(&dataset.subset(&split.train), &dataset.subset(&split.val), cfg)
}

/// Trains on `train_set`; returns the parameters of the epoch with the best
/// accuracy on `val_set` (earliest on ties), or of the last epoch when
/// `val_set` is empty.
pub fn train_partitions(train_set: &Dataset, val_set: &Dataset, cfg: &TrainConfig) -> Result<TrainOutcome> {
    cfg.validate()?;
    let num_classes = train_set.num_classes();
    if num_classes < 2 {
        return Err(Error::InvalidConfig("training needs at least two classes".into()));
    }
    let dims = NetworkDims::new(cfg.hidden_dim, num_classes);
    let mut net = GruNetwork::init(dims, cfg.dropout_rates, cfg.seed)?;
    let mut history = TrainHistory::default();
    if cfg.epochs == 0 {
        return Ok(TrainOutcome { net, history });
    }

    let sequences = training_sequences(train_set, cfg.interval, cfg.normalization)?;
    if sequences.is_empty() {
        return Err(Error::InvalidConfig("no labeled training clips".into()));
    }
    let class_weights = if cfg.class_weighted {
        inverse_frequency(&sequences, num_classes)
    } else {
        vec![1.0; num_classes]
    };

    // Exact-length buckets, each in a fixed order.
    let mut buckets: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, s) in sequences.iter().enumerate() {
        buckets.entry(s.sequence.len()).or_default().push(i);
    }

    let eval_cfg = cfg.clip_prediction(train_set);
    let mut optimizer = Optimizer::new(cfg.optimizer, cfg.learning_rate, &net);
    let mut best: Option<(f64, usize, GruNetwork)> = None;

    for epoch in 0..cfg.epochs {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(epoch as u64 + 1);

        let mut batches: Vec<Vec<usize>> = Vec::new();
        for members in buckets.values() {
            let mut members = members.clone();
            members.shuffle(&mut rng);
            batches.extend(members.chunks(cfg.batch_size).map(<[usize]>::to_vec));
        }
        batches.shuffle(&mut rng);

        let mut loss_sum = 0.0;
        let mut correct = 0usize;
        for (b, batch) in batches.iter().enumerate() {
            let mut acc = Gradients::zeros(dims);
            for (pos, &i) in batch.iter().enumerate() {
                let s = &sequences[i];
                let dropout_seed = mix(cfg.seed, epoch as u64, b as u64, pos as u64);
                let pass = net.forward(&s.sequence.vectors, Mode::Train, dropout_seed)?;
                let (loss, mut dlogits) = softmax_cross_entropy(&pass.logits, s.label)?;
                loss_sum += loss;
                if argmax(&pass.logits) == s.label {
                    correct += 1;
                }
                let w = class_weights[s.label];
                if w != 1.0 {
                    dlogits.iter_mut().for_each(|d| *d *= w);
                }
                let grads = net.backward(&pass.cache, &dlogits)?;
                acc.add_scaled(&grads, 1.0);
            }
            acc.scale(1.0 / batch.len() as f64);
            optimizer.step(&mut net, &acc);
        }

        let val_accuracy = if val_set.clips.is_empty() {
            None
        } else {
            evaluate(&net, val_set, &eval_cfg)?.accuracy
        };
        history.epochs.push(EpochRecord {
            epoch,
            train_loss: loss_sum / sequences.len() as f64,
            train_accuracy: correct as f64 / sequences.len() as f64,
            val_accuracy,
        });

        let score = val_accuracy.unwrap_or(f64::NEG_INFINITY);
        let improves = match &best {
            None => true,
            // Without validation data the latest epoch wins.
            Some((s, _, _)) => score > *s || val_accuracy.is_none(),
        };
        if improves {
            best = Some((score, epoch, net.clone()));
        }
    }

    let (_, epoch, best_net) = best.expect("at least one epoch ran");
    history.best_epoch = Some(epoch);
    Ok(TrainOutcome {
        net: best_net,
        history,
    })
}

/// Clip-level predictions on every labeled clip of `dataset`.
pub fn evaluate(net: &GruNetwork, dataset: &Dataset, cfg: &ClipPredictionConfig) -> Result<MetricsReport> {
    let mut cm = ConfusionMatrix::new(dataset.label_map.clone());
    for clip in &dataset.clips {
        let Some(truth) = clip.label else { continue };
        let (label, _) = predict_clip(net, &dataset.label_map, &clip.frames, cfg)?;
        cm.record(truth, label.index)?;
    }
    Ok(MetricsReport::from_confusion(cm))
}

fn inverse_frequency(sequences: &[LabeledSequence], num_classes: usize) -> Vec<f64> {
    let mut counts = vec![0usize; num_classes];
    for s in sequences {
        counts[s.label] += 1;
    }
    let present = counts.iter().filter(|&&c| c > 0).count() as f64;
    let total = sequences.len() as f64;
    counts
        .iter()
        .map(|&c| if c == 0 { 0.0 } else { total / (present * c as f64) })
        .collect()
}

/// SplitMix64-style mixing of the per-sample dropout seed.
fn mix(seed: u64, epoch: u64, batch: u64, pos: u64) -> u64 {
    let mut x = seed;
    for v in [epoch, batch, pos] {
        x = x.wrapping_add(0x9E37_79B9_7F4A_7C15).wrapping_add(v);
        x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        x ^= x >> 31;
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::keypoints::{Clip, Keypoint, LabelMap, PoseFrame, NUM_KEYPOINTS};

    fn clip(id: usize, label: usize) -> Clip {
        let kps = [Keypoint::new(1.0, 1.0); NUM_KEYPOINTS];
        Clip {
            id: format!("c{id}"),
            label: Some(label),
            width: 10.0,
            height: 10.0,
            frames: vec![PoseFrame::new(kps, 10.0, 10.0).unwrap(); 8],
        }
    }

    fn dataset(labels: &[usize]) -> Dataset {
        Dataset {
            label_map: LabelMap::new(&["a", "b", "c"]).unwrap(),
            clips: labels.iter().enumerate().map(|(i, &l)| clip(i, l)).collect(),
        }
    }

    #[test]
    fn apportion_largest_remainder() {
        assert_eq!(apportion(10, &[0.7, 0.15, 0.15]), [7, 2, 1]);
        assert_eq!(apportion(10, &[1.0, 0.0, 0.0]), [10, 0, 0]);
        assert_eq!(apportion(50, &[0.7, 0.15, 0.15]), [35, 8, 7]);
        assert_eq!(apportion(3, &[0.5, 0.5, 0.0]), [2, 1, 0]);
    }

    #[test]
    fn split_sizes_and_determinism() {
        let ds = dataset(&[0; 10]);
        let s = split_dataset(&ds, [0.7, 0.15, 0.15], 1).unwrap();
        assert_eq!((s.train.len(), s.val.len(), s.test.len()), (7, 2, 1));
        assert_eq!(s, split_dataset(&ds, [0.7, 0.15, 0.15], 1).unwrap());
        let all = split_dataset(&ds, [1.0, 0.0, 0.0], 1).unwrap();
        assert_eq!(all.train, (0..10).collect::<Vec<_>>());
    }

    #[test]
    fn split_is_stratified_and_disjoint() {
        let labels: Vec<usize> = (0..30).map(|i| i % 3).collect();
        let ds = dataset(&labels);
        let s = split_dataset(&ds, [0.7, 0.15, 0.15], 9).unwrap();
        for part in [&s.train, &s.val, &s.test] {
            let mut counts = [0; 3];
            part.iter().for_each(|&i| counts[ds.clips[i].label.unwrap()] += 1);
            assert!(counts.iter().all(|&c| c == counts[0]));
        }
        let mut all: Vec<usize> = [s.train, s.val, s.test].concat();
        all.sort_unstable();
        assert_eq!(all, (0..30).collect::<Vec<_>>());
    }

    #[test]
    fn split_too_few_clips() {
        let ds = dataset(&[0, 0, 0, 1, 1]);
        assert!(matches!(
            split_dataset(&ds, [0.7, 0.15, 0.15], 1),
            Err(Error::TooFewClips { clips: 2, needed: 3, .. })
        ));
        assert!(split_dataset(&ds, [0.7, 0.2, 0.2], 1).is_err());
    }

    #[test]
    fn zero_epochs_returns_init() {
        let ds = dataset(&[0, 1, 2]);
        let cfg = TrainConfig {
            epochs: 0,
            hidden_dim: 5,
            fractions: [1.0, 0.0, 0.0],
            ..TrainConfig::default()
        };
        let out = train(&ds, &cfg).unwrap();
        let init = GruNetwork::init(NetworkDims::new(5, 3), cfg.dropout_rates, cfg.seed).unwrap();
        assert_eq!(out.net, init);
        assert!(out.history.epochs.is_empty());
    }

    #[test]
    fn interval_too_large_propagates() {
        let ds = dataset(&[0, 1, 2]);
        let cfg = TrainConfig {
            epochs: 1,
            hidden_dim: 3,
            interval: IntervalConfig::with_interval(8).unwrap(),
            fractions: [1.0, 0.0, 0.0],
            ..TrainConfig::default()
        };
        assert!(matches!(train(&ds, &cfg), Err(Error::EmptyResult { .. })));
    }
}
