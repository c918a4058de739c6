//! Range tracking and FMCW IF-signal synthesis.

pub mod baseline;
pub mod io;
pub mod synth;
pub mod tracking;

pub use baseline::{
    fit_baseline_phase, synthesize_baseline, BaselineModel, DEFAULT_BASELINE_AMPLITUDE, DEFAULT_PHASE_STEPS,
    RESPIRATION_BAND_HZ,
};
pub use io::{read_ifcb, write_ifcb};
pub use synth::{synthesize_if, IFCube, DEFAULT_SNR_DB};
pub use tracking::{track_ranges, RangeTrackSet, SlowTimeGrid, TrackingOptions, MAX_TRACK_VARIATION};
