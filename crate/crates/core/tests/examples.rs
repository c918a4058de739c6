//! Runs every example end to end and checks what it reports.

#[path = "../examples/baseline_comparison.rs"]
mod baseline_comparison;
#[path = "../examples/depth_to_mesh.rs"]
mod depth_to_mesh;
#[path = "../examples/displacement.rs"]
mod displacement;
#[path = "../examples/full_pipeline.rs"]
mod full_pipeline;
#[path = "../examples/if_synthesis.rs"]
mod if_synthesis;
#[path = "../examples/radar_image.rs"]
mod radar_image;
#[path = "../examples/respiration_metrics.rs"]
mod respiration_metrics;
#[path = "../examples/scattering_centers.rs"]
mod scattering_centers;
#[path = "../examples/spectrogram.rs"]
mod spectrogram;

#[test]
fn depth_to_mesh_builds_a_surface() {
    let mesh = depth_to_mesh::run_example().unwrap();
    assert!(mesh.facet_count() > 1000);
    assert!(mesh.total_area() > 0.1);
}

#[test]
fn scattering_centers_separate_body_parts() {
    assert!(scattering_centers::run_example().unwrap() >= 3);
}

#[test]
fn if_synthesis_recovers_target_ranges() {
    let ranges = if_synthesis::run_example().unwrap();
    assert_eq!(ranges.len(), 3);
    for (found, truth) in ranges.iter().zip([1.0, 1.8, 2.6]) {
        assert!((found - truth).abs() < 0.04, "{found} vs {truth}");
    }
}

#[test]
fn radar_image_locates_both_targets() {
    let (left, right) = radar_image::run_example().unwrap();
    assert!(
        (left.range - 1.0).abs() < 0.05 && (left.azimuth_deg - 15.0).abs() <= 4.0,
        "{left:?}"
    );
    assert!(
        (right.range - 1.6).abs() < 0.05 && (right.azimuth_deg + 25.0).abs() <= 4.0,
        "{right:?}"
    );
}

#[test]
fn displacement_tracks_ground_truth() {
    let scores = displacement::run_example().unwrap();
    assert!(scores.rho > 0.95, "{scores:?}");
}

#[test]
fn spectrogram_ridge_reaches_expected_doppler() {
    let spec = spectrogram::run_example().unwrap();
    let peak = spec.ridge().iter().map(|f| f.abs()).fold(0.0, f64::max);
    assert!((peak - 2.07).abs() <= spec.freqs[1] - spec.freqs[0], "{peak}");
}

#[test]
fn respiration_metrics_find_rate_and_delay() {
    let (rate, lagged) = respiration_metrics::run_example().unwrap();
    assert!((rate - 0.27).abs() < 0.02);
    assert!((lagged.lag_s - 0.4).abs() < 0.05 && lagged.rho > 0.95, "{lagged:?}");
}

#[test]
fn baseline_comparison_scores_both_models() {
    let (proposed, baseline) = baseline_comparison::run_example().unwrap();
    assert!(proposed > 0.9, "{proposed}");
    assert!(baseline.is_finite());
}

#[test]
fn full_pipeline_writes_report_and_plots() {
    let dir = tempfile::tempdir().unwrap();
    let report = full_pipeline::run_example(dir.path()).unwrap();
    for name in [
        "depth.dseq",
        "ground_truth.csv",
        "proposed.ifcb",
        "baseline.ifcb",
        "report.json",
        "summary.csv",
        "displacement_hf.svg",
    ] {
        assert!(dir.path().join(name).is_file(), "{name}");
    }
    assert!(report.reference.is_some());
    assert!((report.rates_hz.0 - 0.25).abs() < 0.1);
}
