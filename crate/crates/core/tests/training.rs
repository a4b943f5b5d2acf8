use skelact_core::trainer::{train, TrainConfig};
use skelact_core::{Clip, Dataset, Keypoint, LabelMap, PoseFrame, NUM_KEYPOINTS};

/// Class 0 drifts right, class 1 drifts down, class 2 stays put.
fn toy_dataset(per_class: usize) -> Dataset {
    let mut clips = Vec::new();
    for label in 0..3 {
        for c in 0..per_class {
            let frames = (0..12)
                .map(|t| {
                    let t = t as f64;
                    let (dx, dy) = match label {
                        0 => (3.0 * t, 0.0),
                        1 => (0.0, 3.0 * t),
                        _ => (0.0, 0.0),
                    };
                    let kps: [Keypoint; NUM_KEYPOINTS] = std::array::from_fn(|j| {
                        Keypoint::new(20.0 + 2.0 * j as f64 + c as f64 + dx, 30.0 + j as f64 + dy)
                    });
                    PoseFrame::new(kps, 100.0, 100.0).unwrap()
                })
                .collect();
            clips.push(Clip {
                id: format!("{label}-{c}"),
                label: Some(label),
                width: 100.0,
                height: 100.0,
                frames,
            });
        }
    }
    Dataset {
        label_map: LabelMap::new(&["right", "down", "still"]).unwrap(),
        clips,
    }
}

fn cfg(epochs: usize) -> TrainConfig {
    TrainConfig {
        epochs,
        hidden_dim: 8,
        batch_size: 4,
        ..TrainConfig::default()
    }
}

#[test]
fn doubling_epochs_keeps_history_prefix() {
    let ds = toy_dataset(5);
    let short = train(&ds, &cfg(3)).unwrap();
    let long = train(&ds, &cfg(6)).unwrap();
    assert_eq!(short.history.epochs.len(), 3);
    assert_eq!(long.history.epochs[..3], short.history.epochs[..]);
}

#[test]
fn training_is_deterministic() {
    let ds = toy_dataset(5);
    let a = train(&ds, &cfg(4)).unwrap();
    let b = train(&ds, &cfg(4)).unwrap();
    assert_eq!(a.net, b.net);
    assert_eq!(a.history, b.history);
    let c = train(&ds, &TrainConfig { seed: 8, ..cfg(4) }).unwrap();
    assert_ne!(a.net, c.net);
}

#[test]
fn best_epoch_has_top_validation_accuracy() {
    let ds = toy_dataset(7);
    let out = train(&ds, &cfg(8)).unwrap();
    let best = out.history.best_epoch.unwrap();
    let top = out
        .history
        .epochs
        .iter()
        .map(|r| r.val_accuracy.unwrap())
        .fold(f64::NEG_INFINITY, f64::max);
    assert_eq!(out.history.epochs[best].val_accuracy, Some(top));
    assert!(out.history.epochs[..best].iter().all(|r| r.val_accuracy.unwrap() < top));
}

#[test]
fn epoch_zero_loss_near_uniform() {
    let ds = toy_dataset(6);
    let out = train(&ds, &cfg(1)).unwrap();
    let ln3 = 3f64.ln();
    let loss = out.history.epochs[0].train_loss;
    assert!((loss - ln3).abs() <= 0.1 * ln3, "{loss}");
}
