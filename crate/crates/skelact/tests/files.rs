use skelact::dataset::{dataset_to_string, load_clips, load_dataset, save_clip, save_dataset};
use skelact::model::{load_model, model_to_string, save_model, SavedModel};
use skelact::synth::{generate_synthetic, SynthConfig, DEFAULT_CLASSES};
use skelact::IoError;
use skelact_core::normalize::normalize_sequence;
use skelact_core::{GruNetwork, IntervalConfig, NetworkDims, Normalization, VECTOR_LEN};

fn small_synth(seed: u64) -> skelact_core::Dataset {
    generate_synthetic(&SynthConfig {
        clips_per_class: 3,
        frames_per_clip: 16,
        seed,
        ..SynthConfig::default()
    })
    .unwrap()
}

#[test]
fn dataset_round_trip_through_disk() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("d.json");
    let ds = small_synth(3);
    save_dataset(&ds, &path).unwrap();
    let back = load_dataset(&path).unwrap();
    assert_eq!(back, ds);
    assert_eq!(dataset_to_string(&back), std::fs::read_to_string(&path).unwrap());
}

#[test]
fn same_seed_gives_identical_files() {
    assert_eq!(dataset_to_string(&small_synth(5)), dataset_to_string(&small_synth(5)));
    assert_ne!(dataset_to_string(&small_synth(5)), dataset_to_string(&small_synth(6)));
}

#[test]
fn single_clip_file_loads() {
    let dir = tempfile::tempdir().unwrap();
    let ds = small_synth(1);
    let path = dir.path().join("clip.json");
    save_clip(&ds.clips[4], &ds.label_map, &path).unwrap();
    let clips = load_clips(&path).unwrap();
    assert_eq!(clips.len(), 1);
    assert_eq!(clips[0].id, ds.clips[4].id);
    assert_eq!(clips[0].label_name.as_deref(), Some("fall"));
    assert_eq!(clips[0].frames, ds.clips[4].frames);

    let all = dir.path().join("all.json");
    save_dataset(&ds, &all).unwrap();
    assert_eq!(load_clips(&all).unwrap().len(), ds.clips.len());
}

#[test]
fn missing_file_names_the_path() {
    let err = load_dataset("/no/such/dir/data.json").unwrap_err();
    assert!(matches!(err, IoError::Io { .. }));
    assert!(err.to_string().contains("/no/such/dir/data.json"), "{err}");
}

#[test]
fn model_forward_identical_after_reload() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.json");
    let ds = small_synth(2);
    let model = SavedModel {
        net: GruNetwork::init(NetworkDims::new(8, 4), [0.2; 4], 11).unwrap(),
        label_map: ds.label_map.clone(),
        normalization: Normalization::Full,
        interval: IntervalConfig::with_interval(4).unwrap(),
    };
    save_model(&model, &path).unwrap();
    let back = load_model(&path).unwrap();
    assert_eq!(model_to_string(&back), std::fs::read_to_string(&path).unwrap());
    for clip in &ds.clips {
        let seq = normalize_sequence(&clip.frames);
        let a = model.net.logits(&seq).unwrap();
        let b = back.net.logits(&seq).unwrap();
        assert!(a.iter().zip(&b).all(|(x, y)| x.to_bits() == y.to_bits()));
    }
}

#[test]
fn noiseless_stand_frames_identical() {
    let ds = generate_synthetic(&SynthConfig {
        classes: vec!["stand".into()],
        clips_per_class: 4,
        noise_sigma: 0.0,
        ..SynthConfig::default()
    })
    .unwrap();
    for clip in &ds.clips {
        assert!(clip.frames.windows(2).all(|w| w[0] == w[1]));
    }
}

/// Nearest class centroid of per-clip mean normalized vectors, fitted and
/// scored on the default dataset.
#[test]
fn default_classes_separable_by_nearest_centroid() {
    let ds = generate_synthetic(&SynthConfig::default()).unwrap();
    assert_eq!(ds.label_map.names(), DEFAULT_CLASSES);
    let means: Vec<[f64; VECTOR_LEN]> = ds
        .clips
        .iter()
        .map(|clip| {
            let mut m = [0.0; VECTOR_LEN];
            let seq = normalize_sequence(&clip.frames);
            for v in &seq {
                for (acc, x) in m.iter_mut().zip(v.as_slice()) {
                    *acc += x / seq.len() as f64;
                }
            }
            m
        })
        .collect();
    let classes = ds.num_classes();
    let mut centroids = vec![[0.0; VECTOR_LEN]; classes];
    let counts = ds.class_counts();
    for (clip, m) in ds.clips.iter().zip(&means) {
        let c = clip.label.unwrap();
        for (acc, x) in centroids[c].iter_mut().zip(m) {
            *acc += x / counts[c] as f64;
        }
    }
    let dist = |a: &[f64; VECTOR_LEN], b: &[f64; VECTOR_LEN]| -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
    };
    let correct = ds
        .clips
        .iter()
        .zip(&means)
        .filter(|(clip, m)| {
            let best = (0..classes)
                .min_by(|&a, &b| dist(m, &centroids[a]).total_cmp(&dist(m, &centroids[b])))
                .unwrap();
            Some(best) == clip.label
        })
        .count();
    let acc = correct as f64 / ds.clips.len() as f64;
    assert!(acc >= 0.9, "nearest-centroid accuracy {acc}");
}
