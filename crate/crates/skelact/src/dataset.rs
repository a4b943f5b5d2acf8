//! Dataset files.
//!
//! ```json
//! {
//!   "format_version": 1,
//!   "label_map": ["wave", "fall", "walk", "stand"],
//!   "clips": [
//!     {
//!       "clip_id": "wave-0000",
//!       "label_name": "wave",
//!       "width": 640,
//!       "height": 480,
//!       "frames": [[[x, y, true], ... 18 entries ...], ...]
//!     }
//!   ]
//! }
//! ```
//!
//! Every frame holds exactly 18 keypoints in COCO-18 order. A keypoint is
//! `[x, y, valid]` or `[x, y]`; without the flag, `[0, 0]` means missing.
//! `label_name` may be omitted for unlabeled clips. A file may also hold a
//! single clip object on its own, which is what `infer` reads.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use skelact_core::{Clip, Dataset, Keypoint, LabelMap, PoseFrame, NUM_KEYPOINTS};

use crate::error::{IoError, Result};

pub const DATASET_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RawKeypoint {
    Flagged(f64, f64, bool),
    Bare(f64, f64),
}

impl RawKeypoint {
    fn to_keypoint(&self) -> Keypoint {
        match *self {
            RawKeypoint::Flagged(x, y, v) => Keypoint::from_raw(x, y, Some(v)),
            RawKeypoint::Bare(x, y) => Keypoint::from_raw(x, y, None),
        }
    }
}

impl From<&Keypoint> for RawKeypoint {
    fn from(kp: &Keypoint) -> Self {
        RawKeypoint::Flagged(kp.x(), kp.y(), kp.is_valid())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClipRecord {
    pub clip_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label_name: Option<String>,
    pub width: f64,
    pub height: f64,
    pub frames: Vec<Vec<RawKeypoint>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetFile {
    pub format_version: u32,
    pub label_map: Vec<String>,
    pub clips: Vec<ClipRecord>,
}

impl ClipRecord {
    pub fn from_clip(clip: &Clip, label_map: &LabelMap) -> Self {
        ClipRecord {
            clip_id: clip.id.clone(),
            label_name: clip.label.and_then(|l| label_map.name(l)).map(str::to_string),
            width: clip.width,
            height: clip.height,
            frames: clip
                .frames
                .iter()
                .map(|f| f.keypoints().iter().map(RawKeypoint::from).collect())
                .collect(),
        }
    }

    /// Validated frames; errors name the clip and frame index.
    pub fn frames(&self) -> Result<Vec<PoseFrame>> {
        if !(self.width > 0.0 && self.height > 0.0) {
            return Err(IoError::Schema(format!(
                "clip `{}`: width and height must be positive",
                self.clip_id
            )));
        }
        if self.frames.is_empty() {
            return Err(IoError::Schema(format!("clip `{}` has no frames", self.clip_id)));
        }
        self.frames
            .iter()
            .enumerate()
            .map(|(i, raw)| {
                if raw.len() != NUM_KEYPOINTS {
                    return Err(IoError::Schema(format!(
                        "clip `{}` frame {i}: expected {NUM_KEYPOINTS} keypoints, found {}",
                        self.clip_id,
                        raw.len()
                    )));
                }
                let kps: [Keypoint; NUM_KEYPOINTS] = std::array::from_fn(|j| raw[j].to_keypoint());
                PoseFrame::new(kps, self.width, self.height)
                    .map_err(|e| IoError::Schema(format!("clip `{}` frame {i}: {e}", self.clip_id)))
            })
            .collect()
    }

    pub fn to_clip(&self, label_map: &LabelMap) -> Result<Clip> {
        let label = match &self.label_name {
            None => None,
            Some(name) => Some(label_map.index_of(name).ok_or_else(|| {
                IoError::Schema(format!(
                    "clip `{}`: label `{name}` is not in the label map",
                    self.clip_id
                ))
            })?),
        };
        Ok(Clip {
            id: self.clip_id.clone(),
            label,
            width: self.width,
            height: self.height,
            frames: self.frames()?,
        })
    }
}

impl DatasetFile {
    pub fn from_dataset(dataset: &Dataset) -> Self {
        DatasetFile {
            format_version: DATASET_FORMAT_VERSION,
            label_map: dataset.label_map.names().to_vec(),
            clips: dataset
                .clips
                .iter()
                .map(|c| ClipRecord::from_clip(c, &dataset.label_map))
                .collect(),
        }
    }

    pub fn into_dataset(self) -> Result<Dataset> {
        if self.format_version != DATASET_FORMAT_VERSION {
            return Err(IoError::Version {
                found: self.format_version,
                expected: DATASET_FORMAT_VERSION,
            });
        }
        let label_map =
            LabelMap::new(&self.label_map).map_err(|e| IoError::Schema(format!("label_map: {e}")))?;
        let mut seen = std::collections::HashSet::new();
        let clips = self
            .clips
            .iter()
            .map(|c| {
                if !seen.insert(c.clip_id.as_str()) {
                    return Err(IoError::Schema(format!("duplicate clip_id `{}`", c.clip_id)));
                }
                c.to_clip(&label_map)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Dataset { label_map, clips })
    }
}

pub fn dataset_from_str(text: &str, origin: &Path) -> Result<Dataset> {
    let file: DatasetFile = serde_json::from_str(text).map_err(|e| IoError::parse(origin, e))?;
    file.into_dataset()
}

pub fn dataset_to_string(dataset: &Dataset) -> String {
    let mut s = serde_json::to_string(&DatasetFile::from_dataset(dataset)).expect("serializable");
    s.push('\n');
    s
}

pub fn load_dataset(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| IoError::io(path, e))?;
    dataset_from_str(&text, path)
}

pub fn save_dataset(dataset: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, dataset_to_string(dataset)).map_err(|e| IoError::io(path, e))
}

/// A clip read for inference; its label, if any, is kept by name.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedClip {
    pub id: String,
    pub label_name: Option<String>,
    pub frames: Vec<PoseFrame>,
}

/// Reads either a dataset file or a single clip object.
pub fn load_clips(path: impl AsRef<Path>) -> Result<Vec<LoadedClip>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| IoError::io(path, e))?;
    let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| IoError::parse(path, e))?;
    if value.get("clips").is_some() {
        let dataset = dataset_from_str(&text, path)?;
        return Ok(dataset
            .clips
            .into_iter()
            .map(|c| LoadedClip {
                label_name: c.label.and_then(|l| dataset.label_map.name(l)).map(str::to_string),
                id: c.id,
                frames: c.frames,
            })
            .collect());
    }
    let record: ClipRecord = serde_json::from_value(value).map_err(|e| IoError::parse(path, e))?;
    Ok(vec![LoadedClip {
        frames: record.frames()?,
        id: record.clip_id,
        label_name: record.label_name,
    }])
}

pub fn save_clip(clip: &Clip, label_map: &LabelMap, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let text = serde_json::to_string(&ClipRecord::from_clip(clip, label_map)).expect("serializable");
    fs::write(path, text + "\n").map_err(|e| IoError::io(path, e))
}
