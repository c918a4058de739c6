//! Compares the depth-driven simulation of a seated subject with the
//! sinusoidal point-target baseline, both scored against ground truth.

use rpsim::metrics::EvaluationRegion;
use rpsim::pipeline::{evaluate, simulate, simulate_baseline, truth_scores, EvaluationInputs, SimulationConfig};
use rpsim::scene::{build_scene, render_sequence, SceneConfig};

/// Returns the proposed and baseline correlations with the ground truth.
pub fn run_example() -> rpsim::Result<(f64, f64)> {
    let mut scene_config = SceneConfig::seated_torso(0.0025, 0.25, 20.0);
    scene_config.depth_jitter_mm = 0.5;
    let scene = build_scene(&scene_config)?;
    let (depth, _) = render_sequence(&scene)?;

    let mut config = SimulationConfig::default();
    config.radar.fast_samples = 128;
    let sim = simulate(&depth, &scene_config.camera.extrinsics, &config, 2)?;
    let slow = sim.cube.slow;
    let torso = scene.breathing_part().expect("scene has a breathing part");
    let truth = scene.los_series(torso, slow.start, slow.rate, slow.samples);
    let (model, baseline) = simulate_baseline(&sim.tracked, &sim.cube, &config, Some(&truth), 3)?;
    println!(
        "baseline: {} torso centers, {:.3} Hz, {:.1} mm, phase {:.2} rad",
        model.centers.len(),
        model.frequency,
        model.amplitude * 1e3,
        model.phase
    );

    let region = EvaluationRegion::new(1.0);
    let inputs = EvaluationInputs {
        subject: "seated".into(),
        condition: "sine".into(),
        reference: Some(truth.clone()),
        max_lag_s: 2.0,
    };
    let eval = evaluate(&sim.cube, &baseline, &region, &inputs)?;
    let r = &eval.report;
    println!(
        "image correlation {:.3} (shift {:+.3} m)",
        r.image.rho, r.image.range_shift_m
    );
    println!("spectrogram correlation {:.3}", r.rho_s);
    println!("rates {:.3} / {:.3} Hz", r.rates_hz.0, r.rates_hz.1);

    let proposed = truth_scores(&eval.a.displacement, &truth)?;
    let sinusoid = truth_scores(&eval.b.displacement, &truth)?;
    println!(
        "truth correlation: proposed {:.3}, baseline {:.3}",
        proposed.rho, sinusoid.rho
    );
    Ok((proposed.rho, sinusoid.rho))
}

#[allow(dead_code)]
fn main() -> rpsim::Result<()> {
    env_logger::init();
    run_example().map(|_| ())
}
