//! Co-located group detection from smartphone audio and WiFi scans.
//!
//! The pipeline filters and aligns per-subject audio, derives pairwise acoustic
//! and proximity similarity series, refines each series into a single pair
//! weight, and runs a staged community-detection procedure over the resulting
//! similarity graphs. Two baselines, a scenario simulator and
//! evaluation helpers are included.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod audio;
pub mod baselines;
pub mod community;
pub mod config;
pub mod dataset;
pub mod detector;
pub mod error;
pub mod eval;
pub mod features;
pub mod pipeline;
pub mod plot;
pub mod proximity;
pub mod sim;

pub use error::{Error, Result};

/// Opaque subject identifier.
pub type SubjectId = String;
