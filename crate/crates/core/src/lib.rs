//! Radar respiration simulator.
//!
//! Depth-camera body geometry is turned into physical-optics scattering
//! centers, which drive a multichannel FMCW IF-signal synthesizer. The
//! `dsp` and `metrics` modules then form radar images, extract chest
//! displacement and spectrograms, and score simulated against reference
//! signals.

pub mod cli;
pub mod dsp;
pub mod em_scatter;
pub mod error;
pub mod fmcw_sim;
pub mod geometry;
pub mod metrics;
pub mod pipeline;
pub mod plot;
pub mod scene;
pub mod series;

pub use error::{Error, Result};

/// 3-vector in meters.
pub type Vec3 = nalgebra::Vector3<f64>;
