//! Scene file to metrics report on disk: renders the plate scene shipped in
//! `examples/data`, stores the depth recording, simulates both radar cubes,
//! reloads everything from disk and writes the evaluation with SVG plots.
//!
//! Usage: `cargo run --release --example full_pipeline [OUT_DIR]`

use std::path::{Path, PathBuf};

use rpsim::fmcw_sim::{read_ifcb, write_ifcb};
use rpsim::geometry::io::{read_dseq, write_dseq};
use rpsim::metrics::{write_summary_csv, EvaluationRegion, MetricsReport};
use rpsim::pipeline::{evaluate, simulate, simulate_baseline, EvaluationInputs, SimulationConfig};
use rpsim::plot::{plot_displacement, plot_radar_image, plot_spectrogram, PlotFormat};
use rpsim::scene::{build_scene, render_sequence, GroundTruth, SceneConfig};

pub fn run_example(out: &Path) -> rpsim::Result<MetricsReport> {
    std::fs::create_dir_all(out).map_err(|e| rpsim::Error::io(out, e))?;
    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("examples/data");

    let mut scene_config = SceneConfig::from_json_file(&data.join("plate_scene.json"))?;
    scene_config.camera.duration = 15.0;
    let scene = build_scene(&scene_config)?;
    let (depth, truth) = render_sequence(&scene)?;
    let depth_path = out.join("depth.dseq");
    write_dseq(&depth_path, &depth, &scene_config.camera.extrinsics)?;
    truth.write_csv(&out.join("ground_truth.csv"))?;
    println!(
        "wrote {} depth frames to {}",
        depth.frames().len(),
        depth_path.display()
    );

    let mut config = SimulationConfig::default();
    config.radar.fast_samples = 128;
    let depth = read_dseq(&depth_path)?;
    let sim = simulate(&depth, &scene_config.camera.extrinsics, &config, 1)?;
    let reference = GroundTruth::read_part_csv(&out.join("ground_truth.csv"), "plate", scene_config.camera.rate)?;
    let (_, baseline) = simulate_baseline(&sim.tracked, &sim.cube, &config, Some(&reference), 2)?;
    write_ifcb(&out.join("proposed.ifcb"), &sim.cube)?;
    write_ifcb(&out.join("baseline.ifcb"), &baseline)?;
    println!("simulated {} centers; cubes written", sim.tracked.len());

    let proposed = read_ifcb(&out.join("proposed.ifcb"))?;
    let baseline = read_ifcb(&out.join("baseline.ifcb"))?;
    let inputs = EvaluationInputs {
        subject: "plate".into(),
        condition: "sine".into(),
        reference: Some(reference),
        max_lag_s: 2.0,
    };
    let eval = evaluate(&proposed, &baseline, &EvaluationRegion::new(1.0), &inputs)?;
    eval.report.write_json(&out.join("report.json"))?;
    write_summary_csv(std::slice::from_ref(&eval.report), &out.join("summary.csv"))?;
    plot_radar_image(&out.join("image_proposed"), &eval.a.image, PlotFormat::Svg)?;
    plot_spectrogram(&out.join("spectrogram_proposed"), &eval.a.spectrogram, PlotFormat::Svg)?;
    let traces = [("proposed", &eval.a.displacement), ("baseline", &eval.b.displacement)];
    plot_displacement(&out.join("displacement_hf"), &traces, true, PlotFormat::Svg)?;

    let r = &eval.report;
    println!("image rho {:.3}, spectrogram rho {:.3}", r.image.rho, r.rho_s);
    println!(
        "displacement rho {:.3}, rms {:.3} mm",
        r.displacement_hf.rho,
        r.displacement_hf.epsilon * 1e3
    );
    if let Some(reference) = &r.reference {
        println!(
            "reference rho: proposed {:.3}, baseline {:.3} (rate {:.3} Hz)",
            reference.rho_t_a.rho, reference.rho_t_b.rho, reference.rate_hz
        );
    }
    println!("outputs in {}", out.display());
    Ok(eval.report)
}

#[allow(dead_code)]
fn main() -> rpsim::Result<()> {
    env_logger::init();
    let out = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("out/full_pipeline"));
    run_example(&out).map(|_| ())
}
