//! Radar imaging, phase displacement and Doppler spectrograms from IF cubes.

pub mod beamform;
pub mod butterworth;
pub mod displacement;
pub mod range;
pub mod spectrogram;
pub mod window;

pub use beamform::{beamform, channel_weights, AngleGrid, ImageCell, RadarImage};
pub use butterworth::Butterworth;
pub use displacement::{displacement_at, extract_displacement, highpass, unwrap_phase, DisplacementTrace};
pub use range::{range_compress, range_compress_window, RangeProfiles};
pub use spectrogram::{gated_slow_signal, spectrogram, SpectrogramData, SpectrogramOptions};
pub use window::{taylor, taylor_default};
