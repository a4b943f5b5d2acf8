//! File formats, synthetic data, and experiment drivers around `skelact-core`.
//!
//! * [`dataset`]: the JSON dataset format (clips of 18-keypoint frames).
//! * [`model`]: the JSON model format with bit-exact parameter round trips.
//! * [`synth`]: a seeded generator of labeled skeleton-motion clips.
//! * [`report`]: metrics, training history, and streaming output records.
//! * [`experiment`]: the three-way sampling/normalization ablation.

pub mod dataset;
pub mod error;
pub mod experiment;
pub mod model;
pub mod report;
pub mod synth;

pub use error::{IoError, Result};
