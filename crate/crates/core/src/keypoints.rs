//! Per-frame keypoints, labels, and labeled clips.
//!
//! Joint order is COCO-18, fixed for every frame and every vector:
//!
//! | index | joint          | index | joint       |
//! |-------|----------------|-------|-------------|
//! | 0     | nose           | 9     | right knee  |
//! | 1     | neck           | 10    | right ankle |
//! | 2     | right shoulder | 11    | left hip    |
//! | 3     | right elbow    | 12    | left knee   |
//! | 4     | right wrist    | 13    | left ankle  |
//! | 5     | left shoulder  | 14    | right eye   |
//! | 6     | left elbow     | 15    | left eye    |
//! | 7     | left wrist     | 16    | right ear   |
//! | 8     | right hip      | 17    | left ear    |

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::ops::Index;

use crate::error::{Error, Result};

pub const NUM_KEYPOINTS: usize = 18;
pub const VECTOR_LEN: usize = 2 * NUM_KEYPOINTS;

pub const COCO18_JOINTS: [&str; NUM_KEYPOINTS] = [
    "nose",
    "neck",
    "right_shoulder",
    "right_elbow",
    "right_wrist",
    "left_shoulder",
    "left_elbow",
    "left_wrist",
    "right_hip",
    "right_knee",
    "right_ankle",
    "left_hip",
    "left_knee",
    "left_ankle",
    "right_eye",
    "left_eye",
    "right_ear",
    "left_ear",
];

/// Class names of the default seven-action label map.
pub const STH_LABELS: [&str; 7] = ["wave", "walk", "stand", "fall", "kick", "sit", "others"];

/// One joint in image space. Missing joints always sit at `(0, 0)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Keypoint {
    x: f64,
    y: f64,
    valid: bool,
}

impl Keypoint {
    pub const MISSING: Keypoint = Keypoint {
        x: 0.0,
        y: 0.0,
        valid: false,
    };

    pub fn new(x: f64, y: f64) -> Self {
        Keypoint { x, y, valid: true }
    }

    pub fn missing() -> Self {
        Self::MISSING
    }

    /// Builds a keypoint from a raw pair and an optional validity flag.
    /// Without a flag, `(0, 0)` is read as the missing-joint sentinel.
    pub fn from_raw(x: f64, y: f64, valid: Option<bool>) -> Self {
        let valid = valid.unwrap_or(!(x == 0.0 && y == 0.0));
        if valid {
            Keypoint::new(x, y)
        } else {
            Keypoint::MISSING
        }
    }

    pub fn x(&self) -> f64 {
        self.x
    }

    pub fn y(&self) -> f64 {
        self.y
    }

    pub fn is_valid(&self) -> bool {
        self.valid
    }
}

/// The 18 keypoints of one frame plus the image size they were measured in.
#[derive(Debug, Clone, PartialEq)]
pub struct PoseFrame {
    keypoints: [Keypoint; NUM_KEYPOINTS],
    width: f64,
    height: f64,
}

impl PoseFrame {
    pub fn new(keypoints: [Keypoint; NUM_KEYPOINTS], width: f64, height: f64) -> Result<Self> {
        if !(width.is_finite() && width > 0.0 && height.is_finite() && height > 0.0) {
            return Err(Error::InvalidFrame(format!(
                "image size must be positive, got {width}x{height}"
            )));
        }
        for (i, kp) in keypoints.iter().enumerate() {
            if !kp.valid {
                continue;
            }
            if !(kp.x.is_finite() && kp.y.is_finite()) {
                return Err(Error::InvalidFrame(format!("keypoint {i} is not finite")));
            }
            if kp.x < 0.0 || kp.x > width || kp.y < 0.0 || kp.y > height {
                return Err(Error::InvalidFrame(format!(
                    "keypoint {i} at ({}, {}) lies outside the {width}x{height} image",
                    kp.x, kp.y
                )));
            }
        }
        Ok(PoseFrame {
            keypoints,
            width,
            height,
        })
    }

    pub fn keypoints(&self) -> &[Keypoint; NUM_KEYPOINTS] {
        &self.keypoints
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn height(&self) -> f64 {
        self.height
    }

    /// Number of detected joints.
    pub fn count_valid(&self) -> usize {
        self.keypoints.iter().filter(|kp| kp.valid).count()
    }

    /// Raw pixel coordinates as `[x0, y0, x1, y1, ..., x17, y17]`.
    pub fn flatten(&self) -> KeypointVector {
        let mut values = [0.0; VECTOR_LEN];
        for (i, kp) in self.keypoints.iter().enumerate() {
            values[2 * i] = kp.x;
            values[2 * i + 1] = kp.y;
        }
        KeypointVector(values)
    }
}

pub fn count_valid(frame: &PoseFrame) -> usize {
    frame.count_valid()
}

pub fn flatten(frame: &PoseFrame) -> KeypointVector {
    frame.flatten()
}

/// A frame as the 36 numbers the network consumes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KeypointVector(pub [f64; VECTOR_LEN]);

impl KeypointVector {
    pub const ZERO: KeypointVector = KeypointVector([0.0; VECTOR_LEN]);

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn from_slice(values: &[f64]) -> Result<Self> {
        let arr: [f64; VECTOR_LEN] = values.try_into().map_err(|_| Error::DimensionMismatch {
            what: "keypoint vector",
            expected: VECTOR_LEN,
            got: values.len(),
        })?;
        Ok(KeypointVector(arr))
    }
}

impl Index<usize> for KeypointVector {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ActionLabel {
    pub index: usize,
    pub name: String,
}

/// Ordered class names. Index `i` is the `i`-th output of the classifier.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMap {
    names: Vec<String>,
}

impl LabelMap {
    pub fn new<S: AsRef<str>>(names: &[S]) -> Result<Self> {
        if names.is_empty() {
            return Err(Error::InvalidConfig("label map is empty".to_string()));
        }
        let names: Vec<String> = names.iter().map(|s| s.as_ref().to_string()).collect();
        for (i, name) in names.iter().enumerate() {
            if name.is_empty() {
                return Err(Error::InvalidConfig(format!("label {i} has an empty name")));
            }
            if names[..i].contains(name) {
                return Err(Error::InvalidConfig(format!("duplicate label `{name}`")));
            }
        }
        Ok(LabelMap { names })
    }

    pub fn sth_default() -> Self {
        LabelMap::new(&STH_LABELS).expect("default labels are unique")
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn name(&self, index: usize) -> Option<&str> {
        self.names.get(index).map(String::as_str)
    }

    pub fn label(&self, index: usize) -> Option<ActionLabel> {
        self.name(index).map(|name| ActionLabel {
            index,
            name: name.to_string(),
        })
    }

    pub fn label_by_name(&self, name: &str) -> Result<ActionLabel> {
        self.index_of(name)
            .and_then(|i| self.label(i))
            .ok_or_else(|| Error::UnknownLabel(name.to_string()))
    }
}

/// Ordered keypoint vectors, optionally labeled.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSequence {
    pub vectors: Vec<KeypointVector>,
    pub label: Option<ActionLabel>,
}

impl SampleSequence {
    pub fn new(vectors: Vec<KeypointVector>, label: Option<ActionLabel>) -> Self {
        SampleSequence { vectors, label }
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }
}

/// One video's worth of frames. All frames share the clip's image size.
#[derive(Debug, Clone, PartialEq)]
pub struct Clip {
    pub id: String,
    pub label: Option<usize>,
    pub width: f64,
    pub height: f64,
    pub frames: Vec<PoseFrame>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub label_map: LabelMap,
    pub clips: Vec<Clip>,
}

impl Dataset {
    /// Copy of the clips at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            label_map: self.label_map.clone(),
            clips: indices.iter().map(|&i| self.clips[i].clone()).collect(),
        }
    }

    pub fn num_classes(&self) -> usize {
        self.label_map.len()
    }

    /// Clip count per class index; unlabeled clips are not counted.
    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = alloc::vec![0; self.label_map.len()];
        for clip in &self.clips {
            if let Some(l) = clip.label {
                counts[l] += 1;
            }
        }
        counts
    }
}
