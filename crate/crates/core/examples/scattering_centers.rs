//! Physical-optics power map of a seated subject and the scattering centers
//! picked from it, grouped by body part.

use rpsim::em_scatter::{cluster_centers, extract_centers, scatter_power_map, AntennaArray, RadarConfig};
use rpsim::geometry::{depth_to_mesh, time_average_depth};
use rpsim::scene::{build_scene, render_sequence, SceneConfig};

/// Returns the number of center clusters.
pub fn run_example() -> rpsim::Result<usize> {
    let config = SceneConfig::seated_torso(0.0025, 0.25, 1.0);
    let (depth, _) = render_sequence(&build_scene(&config)?)?;
    let mesh = depth_to_mesh(&time_average_depth(&depth, 0.5), &config.camera.extrinsics, 50.0)?;

    let radar = RadarConfig::default();
    let array = AntennaArray::linear_3x4();
    let a0 = 5.0 * radar.wavelength();
    let map = scatter_power_map(&mesh, &array, &radar, a0)?;
    let centers = extract_centers(&map, -20.0, a0);
    println!("{} scattering centers within 20 dB of the peak", centers.len());

    let groups = cluster_centers(&centers, 0.15);
    for (i, group) in groups.iter().enumerate() {
        let mean = group.iter().map(|&k| centers.centers[k].position).sum::<rpsim::Vec3>() / group.len() as f64;
        let strongest = group.iter().map(|&k| centers.centers[k].power).fold(0.0, f64::max);
        println!(
            "cluster {i}: {:>3} centers around ({:.2}, {:+.2}, {:+.2}) m, peak {:.1} dB",
            group.len(),
            mean.x,
            mean.y,
            mean.z,
            10.0 * (strongest / map.max_power()).log10()
        );
    }
    Ok(groups.len())
}

#[allow(dead_code)]
fn main() -> rpsim::Result<()> {
    env_logger::init();
    run_example().map(|_| ())
}
