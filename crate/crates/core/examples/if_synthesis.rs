//! Synthesizes the IF signal of three point targets and reads their ranges
//! back from the beat frequencies of a single chirp.

use rpsim::em_scatter::{
    default_phase_term, AntennaArray, RadarConfig, ScatteringCenter, ScatteringCenterSet, SPEED_OF_LIGHT,
};
use rpsim::fmcw_sim::{synthesize_if, RangeTrackSet, SlowTimeGrid};
use rpsim::Vec3;
use rustfft::FftPlanner;

/// Returns the ranges recovered from the beat spectrum, nearest first.
pub fn run_example() -> rpsim::Result<Vec<f64>> {
    let radar = RadarConfig {
        fast_samples: 512,
        ..RadarConfig::default()
    };
    let array = AntennaArray::single_element();
    let targets = [1.0, 1.8, 2.6];
    let centers = ScatteringCenterSet {
        centers: targets
            .iter()
            .enumerate()
            .map(|(i, &r)| ScatteringCenter {
                position: Vec3::new(r, 0.0, 0.0),
                power: 1.0,
                amplitude: 1.0,
                phase_term: default_phase_term(),
                vertex: i,
            })
            .collect(),
        threshold_db: -20.0,
    };
    let tracks = RangeTrackSet::from_motion(&centers, &array, SlowTimeGrid::new(0.0, radar.slow_rate, 1), |_, _| 0.0)?;
    let cube = synthesize_if(&tracks, &centers, &array, &radar, None, 0)?;

    let mut spectrum = cube.chirp(0, 0).to_vec();
    FftPlanner::new()
        .plan_fft_forward(spectrum.len())
        .process(&mut spectrum);
    let n = spectrum.len();
    let bin_hz = 1.0 / (n as f64 * radar.fast_time_step());
    let mag: Vec<f64> = spectrum.iter().map(|z| z.norm()).collect();
    let mut peaks: Vec<usize> = (1..n / 2)
        .filter(|&k| mag[k] > mag[k - 1] && mag[k] >= mag[k + 1])
        .collect();
    peaks.sort_by(|a, b| mag[*b].total_cmp(&mag[*a]));
    peaks.truncate(targets.len());
    peaks.sort();

    let ranges: Vec<f64> = peaks
        .iter()
        .map(|&k| k as f64 * bin_hz * SPEED_OF_LIGHT / (2.0 * radar.chirp_rate()))
        .collect();
    for (truth, found) in targets.iter().zip(&ranges) {
        println!(
            "target at {truth:.2} m -> beat peak at {found:.3} m (bin {:.3} m)",
            radar.range_resolution()
        );
    }
    Ok(ranges)
}

#[allow(dead_code)]
fn main() -> rpsim::Result<()> {
    env_logger::init();
    run_example().map(|_| ())
}
