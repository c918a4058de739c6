//! Renders a seated subject, averages the depth frames and builds the
//! triangulated surface the scattering model runs on.

use rpsim::geometry::{depth_to_mesh, time_average_depth, SurfaceMesh};
use rpsim::scene::{build_scene, render_sequence, SceneConfig};

pub fn run_example() -> rpsim::Result<SurfaceMesh> {
    let config = SceneConfig::seated_torso(0.0025, 0.25, 2.0);
    let scene = build_scene(&config)?;
    let (depth, _) = render_sequence(&scene)?;
    println!(
        "rendered {} frames at {} Hz",
        depth.frames().len(),
        depth.nominal_rate()
    );

    let average = time_average_depth(&depth, 0.5);
    let mesh = depth_to_mesh(&average, &config.camera.extrinsics, 50.0)?;
    println!(
        "mesh: {} vertices, {} facets, {:.3} m² visible surface",
        mesh.vertex_count(),
        mesh.facet_count(),
        mesh.total_area()
    );
    let nearest = mesh.vertices.iter().map(|p| p.norm()).fold(f64::INFINITY, f64::min);
    println!("closest point is {nearest:.3} m from the radar");
    Ok(mesh)
}

#[allow(dead_code)]
fn main() -> rpsim::Result<()> {
    env_logger::init();
    run_example().map(|_| ())
}
