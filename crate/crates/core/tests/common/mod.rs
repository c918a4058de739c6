#![allow(dead_code)]

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use nalgebra::{Matrix3, Vector3};
use num_complex::Complex64;
use rpsim::em_scatter::{default_phase_term, ScatteringCenter, ScatteringCenterSet};
use rpsim::pipeline::{simulate, Simulation, SimulationConfig};
use rpsim::scene::{build_scene, render_sequence, Scene, SceneConfig, Waveform};
use rpsim::series::TimeSeries;
use rpsim::Vec3;

pub fn data_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data")
}

pub fn center_at(position: Vec3, amplitude: f64) -> ScatteringCenter {
    ScatteringCenter {
        position,
        power: amplitude * amplitude,
        amplitude,
        phase_term: default_phase_term(),
        vertex: 0,
    }
}

pub fn center_set(centers: Vec<ScatteringCenter>) -> ScatteringCenterSet {
    ScatteringCenterSet {
        centers,
        threshold_db: -20.0,
    }
}

/// Least-squares amplitude of a sinusoid at `freq` with free phase and offset.
pub fn sine_amplitude(x: &TimeSeries, freq: f64) -> f64 {
    let mut ata = Matrix3::<f64>::zeros();
    let mut atb = Vector3::<f64>::zeros();
    for (i, v) in x.values.iter().enumerate() {
        let w = 2.0 * PI * freq * x.time(i);
        let row = Vector3::new(w.sin(), w.cos(), 1.0);
        ata += row * row.transpose();
        atb += row * *v;
    }
    let c = ata.lu().solve(&atb).expect("regular normal equations");
    c[0].hypot(c[1])
}

/// 0.3 m plate at 1 m breathing 2.5 mm at 0.25 Hz. The 0.5 mm depth jitter
/// dithers the 1 mm depth quantization.
pub fn breathing_plate_scene(duration: f64) -> (SceneConfig, Scene) {
    let mut sc = SceneConfig::breathing_plate(1.0, 0.3, Waveform::sinusoid(0.0025, 0.25, 0.0), duration);
    sc.depth_jitter_mm = 0.5;
    let scene = build_scene(&sc).expect("valid plate scene");
    (sc, scene)
}

pub fn quick_config(snr_db: Option<f64>) -> SimulationConfig {
    let mut cfg = SimulationConfig::default();
    cfg.radar.fast_samples = 128;
    cfg.snr_db = snr_db;
    cfg
}

pub fn simulate_scene(sc: &SceneConfig, scene: &Scene, cfg: &SimulationConfig, seed: u64) -> Simulation {
    let (seq, _) = render_sequence(scene).expect("render");
    simulate(&seq, &sc.camera.extrinsics, cfg, seed).expect("simulate")
}

pub fn trace_waveform() -> Waveform {
    let mut w = Waveform::Trace {
        path: Some("irregular_breathing.csv".into()),
        times: vec![],
        values: vec![],
    };
    w.resolve(&data_dir()).expect("trace file");
    w
}

pub fn phasor(phase: f64) -> Complex64 {
    Complex64::from_polar(1.0, phase)
}
