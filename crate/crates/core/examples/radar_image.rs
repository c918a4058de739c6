//! Range-azimuth image of two breathing targets at different bearings.

use std::f64::consts::PI;

use rpsim::dsp::{ImageCell, RadarImage};
use rpsim::em_scatter::{default_phase_term, AntennaArray, RadarConfig, ScatteringCenter, ScatteringCenterSet};
use rpsim::fmcw_sim::{synthesize_if, RangeTrackSet, SlowTimeGrid};
use rpsim::pipeline::radar_image;
use rpsim::Vec3;

fn target(range: f64, azimuth_deg: f64, vertex: usize) -> ScatteringCenter {
    let a = azimuth_deg.to_radians();
    ScatteringCenter {
        position: range * Vec3::new(a.cos(), a.sin(), 0.0),
        power: 1.0,
        amplitude: 1.0,
        phase_term: default_phase_term(),
        vertex,
    }
}

/// Strongest cell in a horizontal cut through the image.
fn strongest_in_azimuth(image: &RadarImage, lo: f64, hi: f64) -> Option<ImageCell> {
    let (nr, ne, na) = image.shape();
    let mut best: Option<(f64, ImageCell)> = None;
    for r in 0..nr {
        for e in 0..ne {
            for z in (0..na).filter(|&z| (lo..=hi).contains(&image.azimuth_deg[z])) {
                let p = image.power_at(r, e, z);
                if best.as_ref().is_none_or(|b| p > b.0) {
                    best = Some((p, image.cell(r, e, z)));
                }
            }
        }
    }
    best.map(|b| b.1)
}

/// Returns the strongest cell on each side of boresight.
pub fn run_example() -> rpsim::Result<(ImageCell, ImageCell)> {
    let radar = RadarConfig {
        fast_samples: 128,
        ..RadarConfig::default()
    };
    let array = AntennaArray::linear_3x4();
    let centers = ScatteringCenterSet {
        centers: vec![target(1.0, 15.0, 0), target(1.6, -25.0, 1)],
        threshold_db: -20.0,
    };
    let rates = [0.22, 0.31];
    let grid = SlowTimeGrid::new(0.0, radar.slow_rate, 1000);
    let tracks = RangeTrackSet::from_motion(&centers, &array, grid, |n, t| 0.002 * (2.0 * PI * rates[n] * t).sin())?;
    let cube = synthesize_if(&tracks, &centers, &array, &radar, Some(-10.0), 3)?;

    let image = radar_image(&cube, None)?;
    let (nr, ne, na) = image.shape();
    println!("image: {nr} range bins x {ne} elevations x {na} azimuths");
    let left = strongest_in_azimuth(&image, 0.0, 90.0).expect("image has cells");
    let right = strongest_in_azimuth(&image, -90.0, 0.0).expect("image has cells");
    for (side, cell) in [("left", &left), ("right", &right)] {
        println!("{side:>5}: {:.3} m at azimuth {:+.1} deg", cell.range, cell.azimuth_deg);
    }
    Ok((left, right))
}

#[allow(dead_code)]
fn main() -> rpsim::Result<()> {
    env_logger::init();
    run_example().map(|_| ())
}
