use proptest::prelude::*;
use skelact_core::grunet::{softmax, GruLayerParams, GruNetwork, Mode, NetworkDims};
use skelact_core::inference::{aggregate_video, StaticSet, WindowPrediction};
use skelact_core::keypoints::{count_valid, flatten};
use skelact_core::metrics::{accuracy, confusion};
use skelact_core::normalize::{normalize_frame, Normalization};
use skelact_core::sampler::split_by_interval;
use skelact_core::{
    IntervalConfig, Keypoint, KeypointVector, LabelMap, PoseFrame, SampleSequence, StreamWindow,
    NUM_KEYPOINTS, VECTOR_LEN,
};

const W: f64 = 640.0;
const H: f64 = 480.0;

fn frame_strategy() -> impl Strategy<Value = PoseFrame> {
    prop::collection::vec((0.0..=W, 0.0..=H, prop::bool::weighted(0.8)), NUM_KEYPOINTS).prop_map(
        |pts| {
            let kps: [Keypoint; NUM_KEYPOINTS] = std::array::from_fn(|i| {
                let (x, y, v) = pts[i];
                if v {
                    Keypoint::new(x, y)
                } else {
                    Keypoint::missing()
                }
            });
            PoseFrame::new(kps, W, H).unwrap()
        },
    )
}

fn shift(f: &PoseFrame, dx: f64, dy: f64) -> Option<PoseFrame> {
    let kps = f.keypoints().map(|kp| {
        if kp.is_valid() {
            Keypoint::new(kp.x() + dx, kp.y() + dy)
        } else {
            kp
        }
    });
    PoseFrame::new(kps, f.width(), f.height()).ok()
}

fn tagged(n: usize) -> Vec<KeypointVector> {
    (0..n).map(|i| KeypointVector([i as f64; VECTOR_LEN])).collect()
}

proptest! {
    #[test]
    fn flatten_matches_index_loop(f in frame_strategy()) {
        let v = flatten(&f);
        for i in 0..NUM_KEYPOINTS {
            prop_assert_eq!(v[2 * i], f.keypoints()[i].x());
            prop_assert_eq!(v[2 * i + 1], f.keypoints()[i].y());
        }
        let missing = f.keypoints().iter().filter(|k| !k.is_valid()).count();
        prop_assert_eq!(count_valid(&f), NUM_KEYPOINTS - missing);
    }

    #[test]
    fn translation_invariance(f in frame_strategy(), dx in -200.0..200.0f64, dy in -200.0..200.0f64) {
        if let Some(g) = shift(&f, dx, dy) {
            let a = normalize_frame(&f).vector;
            let b = normalize_frame(&g).vector;
            for i in 0..VECTOR_LEN {
                prop_assert!((a[i] - b[i]).abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn valid_outputs_are_zero_mean_and_in_range(f in frame_strategy()) {
        let out = normalize_frame(&f);
        let n = count_valid(&f);
        prop_assert_eq!(out.degenerate, n == 0);
        if n == 0 {
            return Ok(());
        }
        let (mut sx, mut sy) = (0.0, 0.0);
        for (i, kp) in f.keypoints().iter().enumerate() {
            let (x, y) = (out.vector[2 * i], out.vector[2 * i + 1]);
            prop_assert!(x > -1.0 && x < 1.0 && y > -1.0 && y < 1.0);
            if kp.is_valid() {
                sx += x;
                sy += y;
            } else {
                prop_assert_eq!((x, y), (0.0, 0.0));
            }
        }
        prop_assert!((sx / n as f64).abs() <= 1e-12);
        prop_assert!((sy / n as f64).abs() <= 1e-12);
    }

    #[test]
    fn split_partitions_input(n in 1usize..60, k in 1usize..8) {
        let seq = SampleSequence::new(tagged(n), None);
        let cfg = IntervalConfig::new(k, 1).unwrap();
        let out = split_by_interval(&seq, cfg).unwrap();
        prop_assert_eq!(out.len(), k.min(n));
        let mut seen: Vec<usize> = out.iter().flat_map(|s| s.vectors.iter().map(|v| v[0] as usize)).collect();
        for (j, s) in out.iter().enumerate() {
            let idx: Vec<usize> = s.vectors.iter().map(|v| v[0] as usize).collect();
            let expected: Vec<usize> = (j..n).step_by(k).collect();
            prop_assert_eq!(idx, expected);
        }
        seen.sort_unstable();
        prop_assert_eq!(seen, (0..n).collect::<Vec<_>>());
    }

    #[test]
    fn split_count_on_divisible_clips(q in 2usize..12, k in 1usize..6, clips in 1usize..8) {
        let cfg = IntervalConfig::with_interval(k).unwrap();
        let total: usize = (0..clips)
            .map(|_| split_by_interval(&SampleSequence::new(tagged(q * k), None), cfg).unwrap().len())
            .sum();
        prop_assert_eq!(total, k * clips);
    }

    #[test]
    fn window_keeps_last_capacity(cap in 1usize..20, extra in 0usize..30, interval_seed in 0usize..100) {
        let interval = 1 + interval_seed % cap;
        let mut w = StreamWindow::new(cap, interval).unwrap();
        let items = tagged(cap + extra);
        for v in &items {
            let before: Vec<KeypointVector> = w.buffer().copied().collect();
            let _ = w.emit();
            prop_assert_eq!(w.buffer().copied().collect::<Vec<_>>(), before);
            w.push(*v);
        }
        let start = items.len().saturating_sub(cap);
        prop_assert_eq!(w.buffer().copied().collect::<Vec<_>>(), items[start..].to_vec());
        let emitted = w.emit().unwrap();
        prop_assert_eq!(emitted.len(), cap.div_ceil(interval));
        prop_assert_eq!(emitted.len(), w.emitted_len());
    }

    #[test]
    fn hidden_states_bounded(seed in any::<u64>(), scale in 0.1..20.0f64, len in 1usize..12) {
        let mut net = GruNetwork::init(NetworkDims::new(5, 3), [0.0; 4], seed).unwrap();
        for t in net.tensors_mut() {
            t.iter_mut().for_each(|v| *v *= scale);
        }
        let seq: Vec<KeypointVector> = (0..len)
            .map(|t| KeypointVector(std::array::from_fn(|i| ((i * 7 + t * 13) % 11) as f64 - 5.0)))
            .collect();
        let pass = net.forward(&seq, Mode::Eval, 0).unwrap();
        for h in pass.cache.hidden_states() {
            prop_assert!(h.iter().all(|v| (-1.0..=1.0).contains(v)));
        }
    }

    #[test]
    fn softmax_is_a_distribution(logits in prop::collection::vec(-15.0..15.0f64, 2..10)) {
        let p = softmax(&logits);
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        prop_assert!(p.iter().all(|&v| v > 0.0 && v < 1.0));
    }

    #[test]
    fn confusion_margins(pairs in prop::collection::vec((0usize..4, 0usize..4), 1..50)) {
        let map = LabelMap::new(&["a", "b", "c", "d"]).unwrap();
        let cm = confusion(&pairs, &map).unwrap();
        let mut truth = [0u64; 4];
        let mut pred = [0u64; 4];
        for &(t, p) in &pairs {
            truth[t] += 1;
            pred[p] += 1;
        }
        prop_assert_eq!(cm.row_sums(), truth.to_vec());
        prop_assert_eq!(cm.column_sums(), pred.to_vec());
        prop_assert_eq!(cm.total(), pairs.len() as u64);

        // Relabel every class by the same permutation.
        let perm = [2usize, 0, 3, 1];
        let permuted: Vec<(usize, usize)> = pairs.iter().map(|&(t, p)| (perm[t], perm[p])).collect();
        let names = ["c", "a", "d", "b"];
        let cm2 = confusion(&permuted, &LabelMap::new(&names).unwrap()).unwrap();
        prop_assert_eq!(accuracy(&cm).unwrap(), accuracy(&cm2).unwrap());
    }

    #[test]
    fn aggregation_stays_within_predictions(
        labels in prop::collection::vec(0usize..7, 1..30),
        pad_front in 0usize..5,
        pad_back in 0usize..5,
    ) {
        let map = LabelMap::sth_default();
        let statics = StaticSet::default_for(&map);
        let preds: Vec<WindowPrediction> = labels.iter().map(|&l| prediction(&map, l)).collect();
        let result = aggregate_video(&preds, &statics).unwrap();
        prop_assert!(preds.iter().any(|p| p.label == result));

        if preds.iter().any(|p| !statics.contains(&p.label.name)) {
            let stand = map.index_of("stand").unwrap();
            let mut padded: Vec<WindowPrediction> = (0..pad_front).map(|_| prediction(&map, stand)).collect();
            padded.extend(preds.iter().cloned());
            padded.extend((0..pad_back).map(|_| prediction(&map, stand)));
            prop_assert_eq!(aggregate_video(&padded, &statics).unwrap(), result);
        }
    }
}

fn prediction(map: &LabelMap, index: usize) -> WindowPrediction {
    let mut probabilities = vec![0.0; map.len()];
    probabilities[index] = 1.0;
    WindowPrediction {
        label: map.label(index).unwrap(),
        probabilities,
        window_end_index: 0,
    }
}

#[test]
fn single_valid_keypoint_maps_to_origin() {
    let mut kps = [Keypoint::missing(); NUM_KEYPOINTS];
    kps[4] = Keypoint::new(123.0, 45.0);
    let v = normalize_frame(&PoseFrame::new(kps, W, H).unwrap()).vector;
    assert!(v.0.iter().all(|&x| x == 0.0));
}

#[test]
fn translated_sequence_normalizes_identically() {
    let base: Vec<(f64, f64)> = (0..NUM_KEYPOINTS).map(|i| (100.0 + 5.0 * i as f64, 50.0 + 9.0 * i as f64)).collect();
    let frames: Vec<PoseFrame> = (0..6)
        .map(|t| {
            let kps = std::array::from_fn(|i| Keypoint::new(base[i].0 + 20.0 * t as f64, base[i].1 + 3.0 * t as f64));
            PoseFrame::new(kps, W, H).unwrap()
        })
        .collect();
    let out = skelact_core::normalize::normalize_sequence(&frames);
    for v in &out[1..] {
        for i in 0..VECTOR_LEN {
            assert!((v[i] - out[0][i]).abs() <= 1e-12);
        }
    }
}

#[test]
fn scale_only_differs_under_translation() {
    let kps = std::array::from_fn(|i| Keypoint::new(100.0 + i as f64, 100.0));
    let a = PoseFrame::new(kps, W, H).unwrap();
    let b = shift(&a, 50.0, 0.0).unwrap();
    let na = skelact_core::normalize::normalize_frame_with(&a, Normalization::ScaleOnly).vector;
    let nb = skelact_core::normalize::normalize_frame_with(&b, Normalization::ScaleOnly).vector;
    assert_ne!(na, nb);
}

/// Straight-line re-implementation of the eval-mode recurrence.
fn oracle_logits(net: &GruNetwork, seq: &[KeypointVector]) -> Vec<f64> {
    fn sig(x: f64) -> f64 {
        1.0 / (1.0 + (-x).exp())
    }
    fn cell(p: &GruLayerParams, x: &[f64], h: &[f64]) -> Vec<f64> {
        let n = h.len();
        let mut r = vec![0.0; n];
        let mut z = vec![0.0; n];
        for i in 0..n {
            let mut ar = p.b_r[i];
            let mut az = p.b_z[i];
            for (j, xj) in x.iter().enumerate() {
                ar += p.w_r.get(i, j) * xj;
                az += p.w_z.get(i, j) * xj;
            }
            for (j, hj) in h.iter().enumerate() {
                ar += p.u_r.get(i, j) * hj;
                az += p.u_z.get(i, j) * hj;
            }
            r[i] = sig(ar);
            z[i] = sig(az);
        }
        let mut out = vec![0.0; n];
        for i in 0..n {
            let mut a = p.b_h[i];
            for (j, xj) in x.iter().enumerate() {
                a += p.w_h.get(i, j) * xj;
            }
            for j in 0..n {
                a += p.u_h.get(i, j) * r[j] * h[j];
            }
            out[i] = (1.0 - z[i]) * h[i] + z[i] * a.tanh();
        }
        out
    }
    let n = net.dims().hidden_dim;
    let mut inputs: Vec<Vec<f64>> = seq.iter().map(|v| v.0.to_vec()).collect();
    for layer in &net.layers {
        let mut h = vec![0.0; n];
        let mut outs = Vec::new();
        for x in &inputs {
            h = cell(layer, x, &h);
            outs.push(h.clone());
        }
        inputs = outs;
    }
    let top = inputs.last().unwrap();
    (0..net.dims().num_classes)
        .map(|c| net.head_b[c] + (0..n).map(|j| net.head_w.get(c, j) * top[j]).sum::<f64>())
        .collect()
}

fn sample_seq(len: usize) -> Vec<KeypointVector> {
    (0..len)
        .map(|t| KeypointVector(std::array::from_fn(|i| (((i * 31 + t * 17) % 23) as f64 - 11.0) / 15.0)))
        .collect()
}

#[test]
fn forward_matches_loop_oracle() {
    let mut net = GruNetwork::init(NetworkDims::new(4, 3), [0.3; 4], 21).unwrap();
    for (k, t) in net.tensors_mut().into_iter().enumerate() {
        for (j, v) in t.iter_mut().enumerate() {
            *v += 0.01 * ((k * 7 + j) % 5) as f64;
        }
    }
    let seq = sample_seq(6);
    let got = net.logits(&seq).unwrap();
    let want = oracle_logits(&net, &seq);
    for (a, b) in got.iter().zip(&want) {
        assert!((a - b).abs() < 1e-12, "{got:?} vs {want:?}");
    }
}

#[test]
fn dropout_modes() {
    let seq = sample_seq(5);
    let net = GruNetwork::init(NetworkDims::new(6, 3), [0.5; 4], 4).unwrap();
    let a = net.forward(&seq, Mode::Eval, 1).unwrap().logits;
    let b = net.forward(&seq, Mode::Eval, 2).unwrap().logits;
    assert_eq!(a, b);
    let t1 = net.forward(&seq, Mode::Train, 1).unwrap().logits;
    assert_eq!(t1, net.forward(&seq, Mode::Train, 1).unwrap().logits);
    assert_ne!(t1, net.forward(&seq, Mode::Train, 2).unwrap().logits);

    let mut plain = net.clone();
    plain.dropout_rates = [0.0; 4];
    assert_eq!(plain.forward(&seq, Mode::Train, 3).unwrap().logits, a);
}

#[test]
fn head_row_permutation_permutes_logits() {
    let net = GruNetwork::init(NetworkDims::new(5, 4), [0.0; 4], 8).unwrap();
    let mut swapped = net.clone();
    let perm = [3usize, 1, 0, 2];
    let h = 5;
    for (dst, &src) in perm.iter().enumerate() {
        for j in 0..h {
            swapped.head_w.set(dst, j, net.head_w.get(src, j));
        }
        swapped.head_b[dst] = net.head_b[src];
    }
    let seq = sample_seq(4);
    let a = net.logits(&seq).unwrap();
    let b = swapped.logits(&seq).unwrap();
    for (dst, &src) in perm.iter().enumerate() {
        assert_eq!(b[dst], a[src]);
    }
}

#[test]
fn forward_rejects_wrong_width() {
    let net = GruNetwork::init(NetworkDims::new(3, 2), [0.0; 4], 0).unwrap();
    let bad = vec![vec![0.0; 35]; 2];
    assert!(net.forward(&bad, Mode::Eval, 0).is_err());
    let empty: Vec<KeypointVector> = Vec::new();
    assert!(net.forward(&empty, Mode::Eval, 0).is_err());
}
