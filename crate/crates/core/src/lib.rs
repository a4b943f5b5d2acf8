//! Skeleton-sequence action recognition.
//!
//! The pipeline turns per-frame human keypoints into fixed-length vectors,
//! splits clips into strided subsequences, and classifies them with a
//! three-layer GRU trained from scratch by backpropagation through time.
//! Streaming inference keeps a bounded window of recent frames and labels
//! whole videos by their longest dynamic run.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, the
//! synthetic data generator and the command-line front end live in the
//! `skelact` crate.

#![no_std]

extern crate alloc;

pub mod error;
pub mod grunet;
pub mod inference;
pub mod keypoints;
pub mod metrics;
pub mod normalize;
pub mod optim;
pub mod sampler;
pub mod trainer;

pub mod linalg;

pub use error::{Error, Result};
pub use grunet::{GruLayerParams, GruNetwork, Mode, NetworkDims};
pub use keypoints::{
    ActionLabel, Clip, Dataset, Keypoint, KeypointVector, LabelMap, PoseFrame, SampleSequence,
    NUM_KEYPOINTS, VECTOR_LEN,
};
pub use normalize::Normalization;
pub use sampler::{IntervalConfig, StreamWindow};
