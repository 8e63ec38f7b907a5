//! Hybrid shape tracking: periodic segmentation refresh fused with a
//! pyramidal Lucas-Kanade point tracker.
//!
//! The crate is `no_std` (it needs `alloc`). Enable the `std` feature for
//! `std::error::Error` integration, or `rayon` to track points in parallel.
//! File formats, segmentation back ends and the command line live in the
//! `shapetrack` companion crate.

#![cfg_attr(not(feature = "std"), no_std)]
#![allow(clippy::needless_range_loop)]

extern crate alloc;

mod error;
mod math;

pub mod evaluation;
pub mod hybrid;
pub mod imaging;
pub mod klt;
pub mod mask_codec;
pub mod sampling;
pub mod synth;

pub use error::{Error, Result};
pub use hybrid::{
    apply_refresh, compute_delta, run_sequence, Clock, DelayedSource, FrameLog, HybridConfig,
    HybridTracker, MotionDelta, NoClock, SegPoll, SegmentationSource, StageTimings, TrackHistory,
    TrackLog, TrackingMode,
};
pub use imaging::{BinaryMask, GradientImage, GrayImage, ImagePyramid, RgbImage};
pub use klt::{FlowVector, TrackStatus, TrackerConfig};
pub use mask_codec::{DecodeMode, LabelMask, LandmarkClass};
pub use sampling::{Point2, PointRole, PointSet};
