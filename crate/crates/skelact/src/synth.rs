//! Seeded synthetic skeleton-motion clips.
//!
//! Every clip starts from one canonical standing skeleton, animates it
//! according to its class, scales it, places it at a random position on the
//! canvas, and adds Gaussian jitter to every coordinate.
//!
//! | class   | motion                                                       |
//! |---------|--------------------------------------------------------------|
//! | `wave`  | one forearm raised, wrist oscillating vertically             |
//! | `fall`  | whole body rotates about the feet while dropping             |
//! | `walk`  | body translates horizontally; legs and flexed arms swing     |
//! | `stand` | no motion                                                    |
//! | `kick`  | one leg swings out sideways and back, repeatedly             |
//! | `sit`   | upper body and hips lower, knees bend                        |

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use skelact_core::{Clip, Dataset, Keypoint, LabelMap, PoseFrame, NUM_KEYPOINTS};

use crate::error::{IoError, Result};

pub const DEFAULT_CLASSES: [&str; 4] = ["wave", "fall", "walk", "stand"];
pub const SUPPORTED_CLASSES: [&str; 6] = ["wave", "fall", "walk", "stand", "kick", "sit"];
pub const CANVAS_WIDTH: f64 = 640.0;
pub const CANVAS_HEIGHT: f64 = 480.0;

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub classes: Vec<String>,
    pub clips_per_class: usize,
    pub frames_per_clip: usize,
    pub noise_sigma: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            classes: DEFAULT_CLASSES.iter().map(|s| s.to_string()).collect(),
            clips_per_class: 50,
            frames_per_clip: 40,
            noise_sigma: 2.0,
            seed: 7,
        }
    }
}

type Pose = [(f64, f64); NUM_KEYPOINTS];

// COCO-18, pixels, origin at the hip midpoint, y pointing down.
const STANDING: Pose = [
    (0.0, -150.0),   // nose
    (0.0, -125.0),   // neck
    (-25.0, -124.0), // right shoulder
    (-31.0, -90.0),  // right elbow
    (-34.0, -56.0),  // right wrist
    (25.0, -124.0),  // left shoulder
    (31.0, -90.0),   // left elbow
    (34.0, -56.0),   // left wrist
    (-14.0, 0.0),    // right hip
    (-16.0, 45.0),   // right knee
    (-17.0, 90.0),   // right ankle
    (14.0, 0.0),     // left hip
    (16.0, 45.0),    // left knee
    (17.0, 90.0),    // left ankle
    (-6.0, -156.0),  // right eye
    (6.0, -156.0),   // left eye
    (-12.0, -152.0), // right ear
    (12.0, -152.0),  // left ear
];

const R_SHOULDER: usize = 2;
const R_ELBOW: usize = 3;
const R_WRIST: usize = 4;
const L_SHOULDER: usize = 5;
const L_ELBOW: usize = 6;
const L_WRIST: usize = 7;
const R_HIP: usize = 8;
const R_KNEE: usize = 9;
const R_ANKLE: usize = 10;
const L_HIP: usize = 11;
const L_KNEE: usize = 12;
const L_ANKLE: usize = 13;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Motion {
    Wave,
    Fall,
    Walk,
    Stand,
    Kick,
    Sit,
}

impl Motion {
    fn parse(name: &str) -> Option<Motion> {
        Some(match name {
            "wave" => Motion::Wave,
            "fall" => Motion::Fall,
            "walk" => Motion::Walk,
            "stand" => Motion::Stand,
            "kick" => Motion::Kick,
            "sit" => Motion::Sit,
            _ => return None,
        })
    }
}

/// Per-clip random motion parameters, drawn once per clip.
struct Params {
    phase: f64,
    /// Angular frequency in radians per frame.
    omega: f64,
    amplitude: f64,
    side: f64,
    speed: f64,
    onset: f64,
    duration: f64,
    angle: f64,
    drop: f64,
}

impl Params {
    fn draw(rng: &mut ChaCha8Rng, frames: usize) -> Self {
        let cycles = rng.random_range(2.0..4.0);
        Params {
            phase: rng.random_range(0.0..2.0 * PI),
            omega: 2.0 * PI * cycles / frames.max(1) as f64,
            amplitude: rng.random_range(0.0..1.0),
            side: if rng.random_bool(0.5) { 1.0 } else { -1.0 },
            speed: rng.random_range(1.5..3.0),
            onset: rng.random_range(0.1..0.4),
            duration: rng.random_range(0.25..0.45),
            angle: rng.random_range(65.0_f64..90.0).to_radians(),
            drop: rng.random_range(20.0..50.0),
        }
    }
}

fn smoothstep(x: f64) -> f64 {
    let x = x.clamp(0.0, 1.0);
    x * x * (3.0 - 2.0 * x)
}

fn rotate(p: (f64, f64), pivot: (f64, f64), angle: f64) -> (f64, f64) {
    let (s, c) = angle.sin_cos();
    let (dx, dy) = (p.0 - pivot.0, p.1 - pivot.1);
    (pivot.0 + c * dx - s * dy, pivot.1 + s * dx + c * dy)
}

fn pose_at(motion: Motion, p: &Params, t: usize, frames: usize) -> Pose {
    let mut pose = STANDING;
    let tf = t as f64;
    let progress = smoothstep((tf / frames.max(1) as f64 - p.onset) / p.duration);
    match motion {
        Motion::Stand => {}
        Motion::Wave => {
            // Raise one forearm above the shoulder and swing the wrist.
            let (shoulder, elbow, wrist) = if p.side > 0.0 {
                (R_SHOULDER, R_ELBOW, R_WRIST)
            } else {
                (L_SHOULDER, L_ELBOW, L_WRIST)
            };
            let out = if p.side > 0.0 { -1.0 } else { 1.0 };
            let sh = pose[shoulder];
            let e = (sh.0 + out * 30.0, sh.1 - 12.0);
            let swing = (12.0 + 10.0 * p.amplitude) * (p.omega * tf + p.phase).sin();
            pose[elbow] = e;
            pose[wrist] = (e.0 + out * 6.0 + 0.4 * swing, e.1 - 34.0 + swing);
        }
        Motion::Walk => {
            let gait = (0.5 * p.omega * tf + p.phase).sin();
            let stride = 25.0 + 15.0 * p.amplitude;
            let arm = 15.0 + 10.0 * p.amplitude;
            pose[R_ANKLE].0 += stride * gait;
            pose[L_ANKLE].0 -= stride * gait;
            pose[R_KNEE].0 += 0.5 * stride * gait;
            pose[L_KNEE].0 -= 0.5 * stride * gait;
            pose[R_ANKLE].1 -= 10.0 * gait.max(0.0);
            pose[L_ANKLE].1 -= 10.0 * (-gait).max(0.0);
            pose[R_WRIST].0 -= arm * gait;
            pose[L_WRIST].0 += arm * gait;
            pose[R_ELBOW].0 -= 0.5 * arm * gait;
            pose[L_ELBOW].0 += 0.5 * arm * gait;
            // Elbows flex while walking, carrying the wrists higher.
            let carry = 16.0 + 8.0 * p.amplitude;
            pose[R_WRIST].1 -= carry;
            pose[L_WRIST].1 -= carry;
            let shift = p.side * p.speed * tf;
            let bob = 2.0 * gait.abs();
            for j in pose.iter_mut() {
                j.0 += shift;
                j.1 -= bob;
            }
        }
        Motion::Fall => {
            let pivot = (0.0, STANDING[R_ANKLE].1);
            let angle = p.side * p.angle * progress;
            let drop = p.drop * progress;
            for j in pose.iter_mut() {
                let r = rotate(*j, pivot, angle);
                *j = (r.0, r.1 + drop);
            }
        }
        Motion::Kick => {
            let (hip, knee, ankle, out) = if p.side > 0.0 {
                (R_HIP, R_KNEE, R_ANKLE, 1.0)
            } else {
                (L_HIP, L_KNEE, L_ANKLE, -1.0)
            };
            let pulse = (p.omega * tf + p.phase).sin().max(0.0).powi(2);
            let angle = out * (50.0 + 30.0 * p.amplitude).to_radians() * pulse;
            let pivot = pose[hip];
            pose[knee] = rotate(pose[knee], pivot, angle);
            pose[ankle] = rotate(pose[ankle], pivot, angle);
        }
        Motion::Sit => {
            let depth = (35.0 + 15.0 * p.amplitude) * progress;
            for (j, point) in pose.iter_mut().enumerate() {
                match j {
                    R_KNEE | L_KNEE => {
                        point.1 -= 0.3 * depth;
                        point.0 *= 1.0 + 0.4 * progress;
                    }
                    R_ANKLE | L_ANKLE => {}
                    _ => point.1 += depth,
                }
            }
        }
    }
    pose
}

/// Builds `clips_per_class` clips for every class in `cfg.classes`, class by class.
pub fn generate_synthetic(cfg: &SynthConfig) -> Result<Dataset> {
    if cfg.classes.is_empty() || cfg.clips_per_class == 0 || cfg.frames_per_clip == 0 {
        return Err(IoError::Schema(
            "classes, clips per class, and frames per clip must be positive".into(),
        ));
    }
    if !(cfg.noise_sigma.is_finite() && cfg.noise_sigma >= 0.0) {
        return Err(IoError::Schema("noise sigma must be non-negative".into()));
    }
    let motions = cfg
        .classes
        .iter()
        .map(|name| {
            Motion::parse(name).ok_or_else(|| {
                IoError::Schema(format!(
                    "no synthetic motion for class `{name}` (supported: {})",
                    SUPPORTED_CLASSES.join(", ")
                ))
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let label_map = LabelMap::new(&cfg.classes)?;

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let noise = Normal::new(0.0, cfg.noise_sigma).expect("sigma checked above");
    let (w, h) = (CANVAS_WIDTH, CANVAS_HEIGHT);
    let n = cfg.frames_per_clip;
    let mut clips = Vec::with_capacity(motions.len() * cfg.clips_per_class);

    for (label, &motion) in motions.iter().enumerate() {
        for k in 0..cfg.clips_per_class {
            let params = Params::draw(&mut rng, n);
            let scale = rng.random_range(0.9..1.1);
            let poses: Vec<Pose> = (0..n)
                .map(|t| pose_at(motion, &params, t, n).map(|(x, y)| (x * scale, y * scale)))
                .collect();

            let (mut lo_x, mut hi_x, mut lo_y, mut hi_y) =
                (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
            for &(x, y) in poses.iter().flatten() {
                lo_x = lo_x.min(x);
                hi_x = hi_x.max(x);
                lo_y = lo_y.min(y);
                hi_y = hi_y.max(y);
            }
            let margin = 3.0 * cfg.noise_sigma + 1.0;
            let tx = place(&mut rng, margin - lo_x, w - margin - hi_x);
            let ty = place(&mut rng, margin - lo_y, h - margin - hi_y);

            let frames = poses
                .iter()
                .map(|pose| {
                    let kps: [Keypoint; NUM_KEYPOINTS] = std::array::from_fn(|j| {
                        let x = pose[j].0 + tx + noise.sample(&mut rng);
                        let y = pose[j].1 + ty + noise.sample(&mut rng);
                        Keypoint::new(x.clamp(0.0, w), y.clamp(0.0, h))
                    });
                    PoseFrame::new(kps, w, h).expect("clamped to the canvas")
                })
                .collect();
            clips.push(Clip {
                id: format!("{}-{k:04}", cfg.classes[label]),
                label: Some(label),
                width: w,
                height: h,
                frames,
            });
        }
    }
    Ok(Dataset { label_map, clips })
}

/// Uniform in `[lo, hi]`, or the midpoint when the range is empty.
fn place(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    if hi > lo {
        rng.random_range(lo..=hi)
    } else {
        0.5 * (lo + hi)
    }
}
