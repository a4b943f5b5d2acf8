//! Globalization and standardization of a frame's keypoints.
//!
//! Valid joints are re-expressed relative to the mean of the valid joints
//! and divided by the image width and height:
//!
//! ```text
//! x_bar = sum(x_i) / n_k            (valid i only)
//! x_i'  = (x_i - x_bar) / w
//! y_i'  = (y_i - y_bar) / h
//! ```
//!
//! Missing joints are written as `(0, 0)` in the output.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::keypoints::{KeypointVector, PoseFrame, VECTOR_LEN};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Centroid {
    pub x_bar: f64,
    pub y_bar: f64,
}

/// Which preprocessing a model was trained with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Normalization {
    /// Centroid re-origin followed by division by the image size.
    #[default]
    Full,
    /// Division by the image size only; joints stay in absolute position.
    ScaleOnly,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalizedFrame {
    pub vector: KeypointVector,
    /// Set when the frame had no valid keypoint; the vector is then all zero.
    pub degenerate: bool,
}

pub fn centroid(frame: &PoseFrame) -> Result<Centroid> {
    let mut sx = 0.0;
    let mut sy = 0.0;
    let mut n = 0usize;
    for kp in frame.keypoints().iter().filter(|kp| kp.is_valid()) {
        sx += kp.x();
        sy += kp.y();
        n += 1;
    }
    if n == 0 {
        return Err(Error::ZeroValidKeypoints);
    }
    Ok(Centroid {
        x_bar: sx / n as f64,
        y_bar: sy / n as f64,
    })
}

pub fn normalize_frame(frame: &PoseFrame) -> NormalizedFrame {
    normalize_frame_with(frame, Normalization::Full)
}

pub fn normalize_frame_with(frame: &PoseFrame, mode: Normalization) -> NormalizedFrame {
    let origin = match mode {
        Normalization::Full => match centroid(frame) {
            Ok(c) => c,
            Err(_) => {
                return NormalizedFrame {
                    vector: KeypointVector::ZERO,
                    degenerate: true,
                }
            }
        },
        Normalization::ScaleOnly => Centroid {
            x_bar: 0.0,
            y_bar: 0.0,
        },
    };
    let (w, h) = (frame.width(), frame.height());
    let mut values = [0.0; VECTOR_LEN];
    let mut any = false;
    for (i, kp) in frame.keypoints().iter().enumerate() {
        if kp.is_valid() {
            values[2 * i] = (kp.x() - origin.x_bar) / w;
            values[2 * i + 1] = (kp.y() - origin.y_bar) / h;
            any = true;
        }
    }
    NormalizedFrame {
        vector: KeypointVector(values),
        degenerate: !any,
    }
}

pub fn normalize_sequence(frames: &[PoseFrame]) -> Vec<KeypointVector> {
    normalize_sequence_with(frames, Normalization::Full)
}

pub fn normalize_sequence_with(frames: &[PoseFrame], mode: Normalization) -> Vec<KeypointVector> {
    frames
        .iter()
        .map(|f| normalize_frame_with(f, mode).vector)
        .collect()
}
