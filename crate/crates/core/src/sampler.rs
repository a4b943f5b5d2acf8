//! Flexible-interval sampling.
//!
//! Training clips are split into `k` strided subsequences (offsets
//! `0..k`, stride `k`), each carrying the clip's label. At inference time a
//! bounded FIFO holds the most recent frames and, once full, yields the
//! frames at positions `0, k, 2k, ...` of the window.

use alloc::collections::VecDeque;
use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::keypoints::{KeypointVector, SampleSequence};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IntervalConfig {
    pub interval: usize,
    pub min_len: usize,
}

impl IntervalConfig {
    pub const DEFAULT_MIN_LEN: usize = 2;

    pub fn new(interval: usize, min_len: usize) -> Result<Self> {
        if interval == 0 {
            return Err(Error::InvalidConfig("interval must be at least 1".into()));
        }
        if min_len == 0 {
            return Err(Error::InvalidConfig("min_len must be at least 1".into()));
        }
        Ok(IntervalConfig { interval, min_len })
    }

    pub fn with_interval(interval: usize) -> Result<Self> {
        Self::new(interval, Self::DEFAULT_MIN_LEN)
    }
}

impl Default for IntervalConfig {
    fn default() -> Self {
        IntervalConfig {
            interval: 1,
            min_len: Self::DEFAULT_MIN_LEN,
        }
    }
}

/// Splits `seq` into up to `cfg.interval` subsequences. Output `j` holds
/// input indices `j, j + k, j + 2k, ...`; outputs shorter than
/// `cfg.min_len` are dropped.
pub fn split_by_interval(seq: &SampleSequence, cfg: IntervalConfig) -> Result<Vec<SampleSequence>> {
    let k = cfg.interval;
    let n = seq.vectors.len();
    let out: Vec<SampleSequence> = (0..k.min(n))
        .map(|offset| {
            let vectors = seq.vectors[offset..].iter().step_by(k).copied().collect();
            SampleSequence::new(vectors, seq.label.clone())
        })
        .filter(|s| s.len() >= cfg.min_len)
        .collect();
    if out.is_empty() {
        return Err(Error::EmptyResult {
            interval: k,
            min_len: cfg.min_len,
            clip_len: n,
        });
    }
    Ok(out)
}

/// Bounded FIFO of normalized frames for streaming inference.
#[derive(Debug, Clone)]
pub struct StreamWindow {
    capacity: usize,
    interval: usize,
    buffer: VecDeque<KeypointVector>,
}

impl StreamWindow {
    pub fn new(capacity: usize, interval: usize) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::InvalidConfig("window capacity must be at least 1".into()));
        }
        if interval == 0 || interval > capacity {
            return Err(Error::InvalidConfig(format!(
                "window interval must be in 1..={capacity}, got {interval}"
            )));
        }
        Ok(StreamWindow {
            capacity,
            interval,
            buffer: VecDeque::with_capacity(capacity),
        })
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn interval(&self) -> usize {
        self.interval
    }

    pub fn len(&self) -> usize {
        self.buffer.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buffer.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.buffer.len() == self.capacity
    }

    pub fn buffer(&self) -> impl Iterator<Item = &KeypointVector> {
        self.buffer.iter()
    }

    /// Appends `v`, evicting the oldest entry when over capacity.
    pub fn push(&mut self, v: KeypointVector) {
        if self.buffer.len() == self.capacity {
            self.buffer.pop_front();
        }
        self.buffer.push_back(v);
    }

    /// Strided view of a full window; `None` until the window fills.
    pub fn emit(&self) -> Option<SampleSequence> {
        if !self.is_full() {
            return None;
        }
        let vectors = self.buffer.iter().step_by(self.interval).copied().collect();
        Some(SampleSequence::new(vectors, None))
    }

    /// Length of every emitted sequence.
    pub fn emitted_len(&self) -> usize {
        self.capacity.div_ceil(self.interval)
    }
}
