//! Files, segmentation back ends and the command line for
//! [`shapetrack_core`].

pub mod cli;
pub mod formats;
pub mod pnm;
pub mod seqio;
pub mod sources;

pub use shapetrack_core as core;
