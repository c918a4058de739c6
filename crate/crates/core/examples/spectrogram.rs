//! Micro-Doppler spectrogram of a breathing target inside a range gate.

use std::f64::consts::PI;

use rpsim::dsp::{spectrogram, SpectrogramData, SpectrogramOptions};
use rpsim::em_scatter::{default_phase_term, AntennaArray, RadarConfig, ScatteringCenter, ScatteringCenterSet};
use rpsim::fmcw_sim::{synthesize_if, RangeTrackSet, SlowTimeGrid};
use rpsim::Vec3;

pub fn run_example() -> rpsim::Result<SpectrogramData> {
    let radar = RadarConfig {
        fast_samples: 128,
        ..RadarConfig::default()
    };
    let array = AntennaArray::linear_3x4();
    let centers = ScatteringCenterSet {
        centers: vec![ScatteringCenter {
            position: Vec3::new(1.2, 0.0, 0.0),
            power: 1.0,
            amplitude: 1.0,
            phase_term: default_phase_term(),
            vertex: 0,
        }],
        threshold_db: -20.0,
    };
    let (amplitude, rate) = (0.0025, 0.25);
    let grid = SlowTimeGrid::new(0.0, radar.slow_rate, 2000);
    let tracks = RangeTrackSet::from_motion(&centers, &array, grid, |_, t| amplitude * (2.0 * PI * rate * t).sin())?;
    let cube = synthesize_if(&tracks, &centers, &array, &radar, Some(-10.0), 5)?;

    let spec = spectrogram(&cube, &SpectrogramOptions::new((1.0, 1.4)))?;
    println!(
        "{} windows x {} Doppler bins ({:.2} Hz apart)",
        spec.times.len(),
        spec.freqs.len(),
        spec.freqs[1] - spec.freqs[0]
    );
    let ridge = spec.ridge();
    let peak = ridge.iter().map(|f| f.abs()).fold(0.0, f64::max);
    let expected = 2.0 * (2.0 * PI * rate * amplitude) / radar.wavelength();
    println!("largest ridge Doppler {peak:.2} Hz, expected {expected:.2} Hz");
    for (t, f) in spec.times.iter().zip(&ridge).step_by(10) {
        println!("  t = {t:5.2} s  ridge {f:+.2} Hz");
    }
    Ok(spec)
}

#[allow(dead_code)]
fn main() -> rpsim::Result<()> {
    env_logger::init();
    run_example().map(|_| ())
}
