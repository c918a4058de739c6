use proptest::prelude::*;
use rpsim::geometry::io::{read_dseq, write_dseq};
use rpsim::geometry::{
    depth_to_mesh, surface_at, time_average_depth, DepthFrame, DepthSequence, ExtrinsicTransform, Intrinsics,
};
use rpsim::scene::{build_scene, render_sequence, sample_waveform, GroundTruth, SceneConfig, Waveform};
use rpsim::{Error, Vec3};

fn intrinsics(width: usize, height: usize, focal: f64) -> Intrinsics {
    Intrinsics {
        fx: focal,
        fy: focal,
        cx: 0.5 * (width as f64 - 1.0),
        cy: 0.5 * (height as f64 - 1.0),
    }
}

/// Unquantized depth image of a sphere centred on the optical axis.
fn sphere_frame(width: usize, radius: f64, distance: f64, focal: f64) -> DepthFrame {
    let k = intrinsics(width, width, focal);
    let c = Vec3::new(0.0, 0.0, distance);
    let mut depth = vec![0.0f32; width * width];
    for v in 0..width {
        for u in 0..width {
            let d = k.ray(u as f64, v as f64);
            let b = d.dot(&c);
            let disc = b * b - (c.norm_squared() - radius * radius);
            if disc > 0.0 {
                let s = b - disc.sqrt();
                depth[v * width + u] = (s * d.z * 1e3) as f32;
            }
        }
    }
    DepthFrame::new(width, width, 0.0, depth, k).unwrap()
}

#[test]
fn sphere_normals_match_analytic_within_three_degrees() {
    // 0.2 m sphere whose front is 0.8 m away, sampled at about 5 mm per pixel
    let frame = sphere_frame(101, 0.2, 1.0, 160.0);
    let ext = ExtrinsicTransform::colocated();
    let mesh = depth_to_mesh(&frame, &ext, 50.0).unwrap();
    let center = ext.apply(&Vec3::new(0.0, 0.0, 1.0));
    let mut checked = 0;
    let mut worst: f64 = 0.0;
    for ((p, n), &valid) in mesh.vertices.iter().zip(&mesh.vertex_normals).zip(&mesh.vertex_valid) {
        let analytic = (p - center).normalize();
        // stay clear of the silhouette, where the one-sided mesh cannot see the tangent plane
        if !valid || analytic.dot(&(mesh.viewpoint - p).normalize()) < 0.5 {
            continue;
        }
        worst = worst.max(n.angle(&analytic).to_degrees());
        checked += 1;
    }
    assert!(checked > 500, "{checked}");
    assert!(worst < 3.0, "worst normal error {worst:.2}°");
}

#[test]
fn tilted_plane_area_matches_quadrilateral() {
    // plane z = 1 m + 0.3 x seen at 2 mm pixel pitch
    let (w, h, f) = (80, 60, 500.0);
    let k = intrinsics(w, h, f);
    let depth_at = |u: usize, _v: usize| {
        let x_over_z = (u as f64 - k.cx) / f;
        1.0 / (1.0 - 0.3 * x_over_z)
    };
    let depth: Vec<f32> = (0..h)
        .flat_map(|v| (0..w).map(move |u| (depth_at(u, v) * 1e3) as f32))
        .collect();
    let frame = DepthFrame::new(w, h, 0.0, depth, k).unwrap();
    let mesh = depth_to_mesh(&frame, &ExtrinsicTransform::colocated(), 50.0).unwrap();
    let corner = |u: usize, v: usize| k.back_project(u as f64, v as f64, depth_at(u, v));
    let d1 = corner(w - 1, h - 1) - corner(0, 0);
    let d2 = corner(0, h - 1) - corner(w - 1, 0);
    let analytic = 0.5 * d1.cross(&d2).norm();
    let rel = (mesh.total_area() - analytic).abs() / analytic;
    assert!(rel < 0.01, "relative area error {rel:.2e}");
}

#[test]
fn rendered_mesh_recovers_scene_surface() {
    let mut sc = SceneConfig::seated_torso(0.0, 0.25, 0.2);
    sc.camera.duration = 0.2;
    let scene = build_scene(&sc).unwrap();
    let (seq, _) = render_sequence(&scene).unwrap();
    let frame = &seq.frames()[0];
    let ext = &sc.camera.extrinsics;
    let mesh = depth_to_mesh(frame, ext, 50.0).unwrap();
    let origin = ext.camera_origin();
    let mut worst: f64 = 0.0;
    for p in &mesh.vertices {
        let u = (p - origin).normalize();
        let (s, _) = scene
            .intersect(&origin, &u, frame.timestamp)
            .expect("vertex lies on a part");
        // 1 mm quantization of the optical depth, stretched along oblique rays
        let slack = 0.5e-3 / ext.inverse_apply(&(origin + u)).z.abs() + 1e-6;
        worst = worst.max(((p - origin).norm() - s).abs() - slack);
    }
    assert!(worst <= 0.5e-3, "excess error {worst:.2e} m");
}

#[test]
fn surface_at_uses_nearest_frame_and_rejects_out_of_range() {
    let sc = SceneConfig::breathing_plate(1.0, 0.3, Waveform::sinusoid(0.004, 0.25, 0.0), 1.0);
    let scene = build_scene(&sc).unwrap();
    let (seq, _) = render_sequence(&scene).unwrap();
    let ext = &sc.camera.extrinsics;
    let frames = seq.frames();
    let exact = surface_at(&seq, frames[3].timestamp, ext, 50.0).unwrap();
    assert_eq!(exact.vertices, depth_to_mesh(&frames[3], ext, 50.0).unwrap().vertices);
    let dt = frames[4].timestamp - frames[3].timestamp;
    let near4 = surface_at(&seq, frames[3].timestamp + 0.7 * dt, ext, 50.0).unwrap();
    assert_eq!(near4.vertices, depth_to_mesh(&frames[4], ext, 50.0).unwrap().vertices);
    let err = surface_at(&seq, seq.duration() + 1.0, ext, 50.0).unwrap_err();
    assert!(matches!(err, Error::Domain(_)), "{err}");
}

#[test]
fn ground_truth_equals_configured_waveform() {
    let w = Waveform::sinusoid(0.003, 0.3, 0.4);
    let sc = SceneConfig::breathing_plate(1.2, 0.3, w.clone(), 4.0);
    let scene = build_scene(&sc).unwrap();
    let times = scene.frame_times();
    let gt = GroundTruth::from_scene(&scene, &times);
    let expected = sample_waveform(&w, times[0], sc.camera.rate, times.len());
    assert_eq!(gt.normal_displacement[0], expected.values);
    // the plate faces the radar, so outward motion shortens the range by the same amount
    for (los, n) in gt.los_displacement[0].iter().zip(&expected.values) {
        assert!((los + n).abs() < 1e-12);
    }
}

#[test]
fn rendering_is_deterministic_and_round_trips_through_dseq() {
    let mut sc = SceneConfig::breathing_plate(1.0, 0.3, Waveform::sinusoid(0.0025, 0.25, 0.0), 2.0);
    sc.depth_jitter_mm = 0.7;
    sc.seed = 21;
    let scene = build_scene(&sc).unwrap();
    let (a, _) = render_sequence(&scene).unwrap();
    let (b, _) = render_sequence(&scene).unwrap();
    assert_eq!(a.frames(), b.frames());
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("plate.dseq");
    write_dseq(&path, &a, &sc.camera.extrinsics).unwrap();
    let back = read_dseq(&path).unwrap();
    assert_eq!(back.frames(), a.frames());
    assert_eq!(back.nominal_rate(), a.nominal_rate());
}

#[test]
fn body_yaw_turns_the_assembly() {
    let sc = SceneConfig::seated_torso(0.0, 0.25, 1.0);
    let mut turned = sc.clone();
    turned.body_yaw_deg = 90.0;
    let front = build_scene(&sc).unwrap();
    let side = build_scene(&turned).unwrap();
    let arm = front.part_index("left_arm").unwrap();
    let pivot = sc.pivot();
    let before = front.parts[arm].center - pivot;
    let after = side.parts[arm].center - pivot;
    assert!((before.z - after.z).abs() < 1e-12);
    let (hb, ha) = (before.xy(), after.xy());
    assert!((hb.norm() - ha.norm()).abs() < 1e-12);
    assert!(hb.dot(&ha).abs() < 1e-9 * hb.norm_squared());
}

fn frame_strategy() -> impl Strategy<Value = Vec<Vec<f32>>> {
    prop::collection::vec(
        prop::collection::vec(prop_oneof![Just(0.0f32), 300.0f32..2800.0], 12),
        2..8,
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn time_average_is_linear_in_depth_scale(frames in frame_strategy(), scale in 0.2f32..1.0) {
        let k = intrinsics(4, 3, 100.0);
        let seq = |s: f32| {
            let fs = frames
                .iter()
                .enumerate()
                .map(|(i, d)| DepthFrame::new(4, 3, i as f64 / 15.0, d.clone(), k).unwrap().scaled(s))
                .collect();
            DepthSequence::new(fs, 15.0).unwrap()
        };
        let base = time_average_depth(&seq(1.0), 0.5);
        let scaled = time_average_depth(&seq(scale), 0.5);
        for (a, b) in base.depth_mm.iter().zip(&scaled.depth_mm) {
            prop_assert!((a * scale - b).abs() <= 1e-3 * a.max(1.0));
        }
    }
}
