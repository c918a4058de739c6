//! Synthetic breathing-body scenes rendered to depth sequences with ground truth.

pub mod config;
pub mod render;
pub mod shapes;

pub use config::{
    sample_waveform, Breathing, CameraConfig, PartConfig, SceneConfig, Waveform, BREATHING_FREQUENCY_RANGE,
    MAX_BREATHING_AMPLITUDE,
};
pub use render::{build_scene, render_depth, render_sequence, GroundTruth, Scene, ScenePart};
pub use shapes::{rotation_from_angles, Shape};
