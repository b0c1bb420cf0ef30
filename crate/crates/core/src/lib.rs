//! Trace-driven simulation and hybrid control for adaptive live streaming.
//!
//! The controller combines four pieces that run once per downloaded GOP:
//!
//! * [`predictor`] estimates the next segment's actual bitrate at every quality
//!   level (cross-level scaling plus Kaufman's adaptive moving average) and a
//!   weighted-moving-average throughput.
//! * [`playback`] picks the target-buffer profile, which fixes the playback rate.
//! * [`bitrate`] picks the quality level that minimises the estimated
//!   post-download latency while keeping the buffer above a stall threshold.
//! * [`framedrop`] derives the latency above which the client skips ahead.
//!
//! [`sim`] replays a [`trace::VideoTrace`] against a [`trace::NetworkTrace`]
//! frame by frame, and [`qoe`] scores the resulting log. [`harness`] holds the
//! comparison schemes and batch tooling; [`synth`] generates the bundled suite.

pub mod bitrate;
pub mod config;
pub mod error;
pub mod framedrop;
pub mod harness;
pub mod playback;
pub mod predictor;
pub mod qoe;
pub mod sim;
pub mod synth;
pub mod trace;

pub use config::SchemeConfig;
pub use error::{Error, Result};
pub use harness::{RunSummary, SchemeId};
pub use qoe::{QoeBreakdown, QoeWeights};
pub use sim::{ControllerDecision, SimulationLog};
pub use trace::{BitrateLadder, NetworkTrace, VideoTrace};
