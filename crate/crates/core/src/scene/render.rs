use std::path::Path;

use nalgebra::Matrix3;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{DepthFrame, DepthSequence, MAX_DEPTH_MM, MIN_DEPTH_MM};
use crate::scene::config::{Breathing, SceneConfig};
use crate::scene::shapes::{rotation_from_angles, Shape};
use crate::series::TimeSeries;
use crate::Vec3;

/// One posed body part.
#[derive(Debug, Clone)]
pub struct ScenePart {
    pub name: String,
    pub shape: Shape,
    pub center: Vec3,
    /// Local-to-radar rotation.
    pub rotation: Matrix3<f64>,
    pub breathing: Option<Breathing>,
    /// Static surface point on the line of sight from the radar to the center.
    pub reference_point: Vec3,
    /// Outward normal at `reference_point`.
    pub reference_normal: Vec3,
}

impl ScenePart {
    fn to_local(&self, p: &Vec3) -> Vec3 {
        self.rotation.transpose() * (p - self.center)
    }

    /// Breathing amplitude at time `t` (displacement at the taper peak).
    pub fn amplitude(&self, t: f64) -> f64 {
        self.breathing.as_ref().map_or(0.0, |b| b.waveform.value(t))
    }

    /// Outward normal displacement at `p` (radar coordinates) and time `t`.
    pub fn displacement(&self, p: &Vec3, t: f64) -> f64 {
        match &self.breathing {
            None => 0.0,
            Some(b) => {
                let taper = b.taper_sigma.map_or(1.0, |s| {
                    (-(p - self.reference_point).norm_squared() / (2.0 * s * s)).exp()
                });
                b.waveform.value(t) * taper
            }
        }
    }

    /// Static analytic surface intersection, radar coordinates.
    pub fn intersect_static(&self, o: &Vec3, u: &Vec3) -> Option<f64> {
        let ol = self.to_local(o);
        let ul = self.rotation.transpose() * u;
        self.shape.intersect(&ol, &ul)
    }

    /// Ray parameter of the breathing surface hit at time `t`.
    pub fn intersect(&self, o: &Vec3, u: &Vec3, t: f64) -> Option<f64> {
        let ol = self.to_local(o);
        let ul = self.rotation.transpose() * u;
        // cheap bounding-sphere rejection
        let b = self.shape.bounding_radius() + 0.03;
        let tc = -ol.dot(&ul);
        if ol.norm_squared() - tc * tc > b * b {
            return None;
        }
        let mut s = self.shape.intersect(&ol, &ul)?;
        if self.breathing.is_none() {
            return Some(s);
        }
        for _ in 0..6 {
            let pl = ol + ul * s;
            let pw = self.center + self.rotation * pl;
            let f = self.shape.sdf(&pl) - self.displacement(&pw, t);
            let g = self.shape.normal(&pl).dot(&ul);
            if g.abs() < 0.05 {
                break;
            }
            let step = f / g;
            s -= step;
            if step.abs() < 1e-10 {
                break;
            }
        }
        (s >= 0.0).then_some(s)
    }

    /// Line-of-sight range change of the reference point at time `t`, meters.
    ///
    /// Outward motion of a radar-facing surface shortens the range, so this
    /// is negative when the surface bulges toward the radar.
    pub fn los_range_change(&self, t: f64) -> f64 {
        let los = self.reference_point.normalize();
        self.amplitude(t) * self.reference_normal.dot(&los)
    }
}

/// Posed scene ready for rendering.
#[derive(Debug, Clone)]
pub struct Scene {
    pub parts: Vec<ScenePart>,
    pub config: SceneConfig,
}

/// Poses every part, applying the body yaw about the vertical pivot axis.
pub fn build_scene(config: &SceneConfig) -> Result<Scene> {
    config.validate()?;
    let pivot = config.pivot();
    let body = rotation_from_angles(config.body_yaw_deg, 0.0, 0.0);
    let mut parts = Vec::with_capacity(config.parts.len());
    for pc in &config.parts {
        let center = pivot + body * (Vec3::from(pc.center) - pivot);
        let rotation = body * rotation_from_angles(pc.yaw_deg, pc.pitch_deg, pc.roll_deg);
        let mut part = ScenePart {
            name: pc.name.clone(),
            shape: pc.shape.clone(),
            center,
            rotation,
            breathing: pc.breathing.clone(),
            reference_point: center,
            reference_normal: -center.normalize(),
        };
        let u = center.normalize();
        if let Some(s) = part.intersect_static(&Vec3::zeros(), &u) {
            part.reference_point = u * s;
            part.reference_normal = rotation * part.shape.normal(&part.to_local(&part.reference_point));
        }
        parts.push(part);
    }
    for i in 0..parts.len() {
        for j in i + 1..parts.len() {
            if parts_overlap(&parts[i], &parts[j]) {
                log::warn!("parts {} and {} overlap", parts[i].name, parts[j].name);
            }
        }
    }
    Ok(Scene {
        parts,
        config: config.clone(),
    })
}

/// Grid test for a shared interior point.
fn parts_overlap(a: &ScenePart, b: &ScenePart) -> bool {
    let (ra, rb) = (a.shape.bounding_radius(), b.shape.bounding_radius());
    if (a.center - b.center).norm() >= ra + rb {
        return false;
    }
    const N: usize = 16;
    let step = 2.0 * ra / N as f64;
    for i in 0..=N {
        for j in 0..=N {
            for k in 0..=N {
                let local = Vec3::new(i as f64, j as f64, k as f64) * step - Vec3::repeat(ra);
                if a.shape.sdf(&local) >= 0.0 {
                    continue;
                }
                let world = a.center + a.rotation * local;
                if b.shape.sdf(&b.to_local(&world)) < 0.0 {
                    return true;
                }
            }
        }
    }
    false
}

impl Scene {
    /// Nearest breathing-surface hit: (ray parameter, part index).
    pub fn intersect(&self, o: &Vec3, u: &Vec3, t: f64) -> Option<(f64, usize)> {
        self.parts
            .iter()
            .enumerate()
            .filter_map(|(i, p)| p.intersect(o, u, t).map(|s| (s, i)))
            .min_by(|a, b| a.0.total_cmp(&b.0))
    }

    pub fn part_index(&self, name: &str) -> Option<usize> {
        self.parts.iter().position(|p| p.name == name)
    }

    /// Index of the first breathing part, if any.
    pub fn breathing_part(&self) -> Option<usize> {
        self.parts.iter().position(|p| p.breathing.is_some())
    }

    /// Analytic line-of-sight displacement of a part on a uniform grid.
    pub fn los_series(&self, part: usize, start: f64, rate: f64, samples: usize) -> TimeSeries {
        let p = &self.parts[part];
        TimeSeries::new(
            start,
            rate,
            (0..samples)
                .map(|i| p.los_range_change(start + i as f64 / rate))
                .collect(),
        )
    }

    pub fn frame_times(&self) -> Vec<f64> {
        let cam = &self.config.camera;
        (0..cam.frame_count()).map(|k| k as f64 / cam.rate).collect()
    }
}

/// Depth image of the scene at time `t`.
///
/// Depths are optical-axis distances rounded to whole millimeters after
/// optional Gaussian jitter; values outside the sensor range become 0.
pub fn render_depth(scene: &Scene, t: f64, frame_index: u64) -> Result<DepthFrame> {
    let cam = &scene.config.camera;
    let intr = cam.intrinsics;
    let origin = cam.extrinsics.camera_origin();
    let mut rng = ChaCha8Rng::seed_from_u64(scene.config.seed);
    rng.set_stream(frame_index);
    let jitter = (scene.config.depth_jitter_mm > 0.0)
        .then(|| Normal::new(0.0, scene.config.depth_jitter_mm).expect("validated jitter"));
    let mut depth = vec![0f32; cam.width * cam.height];
    for v in 0..cam.height {
        for u in 0..cam.width {
            let ray_c = intr.ray(u as f64, v as f64);
            let ray_w = cam.extrinsics.apply_direction(&ray_c);
            if let Some((s, _)) = scene.intersect(&origin, &ray_w, t) {
                let mut z_mm = s * ray_c.z * 1e3;
                if let Some(n) = &jitter {
                    z_mm += n.sample(&mut rng);
                }
                let q = z_mm.round() as f32;
                if (MIN_DEPTH_MM..=MAX_DEPTH_MM).contains(&q) {
                    depth[v * cam.width + u] = q;
                }
            }
        }
    }
    let frame = DepthFrame::new(cam.width, cam.height, t, depth, intr)?;
    if frame.valid_count() == 0 {
        return Err(Error::EmptyMesh(format!("no scene part is visible at t = {t:.3} s")));
    }
    Ok(frame)
}

/// Per-part displacement histories sampled at the depth frame times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub part_names: Vec<String>,
    pub times: Vec<f64>,
    /// Outward normal displacement at each part's taper peak, `[part][frame]`.
    pub normal_displacement: Vec<Vec<f64>>,
    /// Line-of-sight range change of each part's reference point, `[part][frame]`.
    pub los_displacement: Vec<Vec<f64>>,
}

impl GroundTruth {
    pub fn from_scene(scene: &Scene, times: &[f64]) -> Self {
        Self {
            part_names: scene.parts.iter().map(|p| p.name.clone()).collect(),
            times: times.to_vec(),
            normal_displacement: scene
                .parts
                .iter()
                .map(|p| times.iter().map(|&t| p.amplitude(t)).collect())
                .collect(),
            los_displacement: scene
                .parts
                .iter()
                .map(|p| times.iter().map(|&t| p.los_range_change(t)).collect())
                .collect(),
        }
    }

    /// CSV rows `time_s,part_id,displacement_m` with line-of-sight range change.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["time_s", "part_id", "displacement_m"])?;
        for (k, t) in self.times.iter().enumerate() {
            for (p, name) in self.part_names.iter().enumerate() {
                w.write_record([
                    format!("{t:.6}"),
                    name.clone(),
                    format!("{:.9e}", self.los_displacement[p][k]),
                ])?;
            }
        }
        w.flush().map_err(|e| Error::io(path, e))?;
        Ok(())
    }

    /// Reads one part's line-of-sight trace and resamples it to `rate`.
    pub fn read_part_csv(path: &Path, part: &str, rate: f64) -> Result<TimeSeries> {
        let mut r = csv::Reader::from_path(path).map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
        let mut t = Vec::new();
        let mut v = Vec::new();
        for rec in r.records() {
            let rec = rec?;
            if rec.get(1) != Some(part) {
                continue;
            }
            let num = |i: usize| -> Result<f64> {
                rec.get(i)
                    .and_then(|s| s.trim().parse().ok())
                    .ok_or_else(|| Error::Format(format!("{}: malformed ground-truth row", path.display())))
            };
            t.push(num(0)?);
            v.push(num(2)?);
        }
        if t.is_empty() {
            return Err(Error::Validation(format!(
                "{}: no rows for part {part:?}",
                path.display()
            )));
        }
        TimeSeries::from_samples(&t, &v, rate)
    }
}

/// Renders every frame of the configured recording.
pub fn render_sequence(scene: &Scene) -> Result<(DepthSequence, GroundTruth)> {
    let times = scene.frame_times();
    let frames = times
        .par_iter()
        .enumerate()
        .map(|(k, &t)| render_depth(scene, t, k as u64))
        .collect::<Result<Vec<_>>>()?;
    let seq = DepthSequence::new(frames, scene.config.camera.rate)?;
    Ok((seq, GroundTruth::from_scene(scene, &times)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::config::{CameraConfig, PartConfig, Waveform};

    fn plate_scene(amplitude: f64) -> SceneConfig {
        let mut cfg = SceneConfig::breathing_plate(1.0, 0.4, Waveform::sinusoid(amplitude, 0.25, 0.0), 8.0);
        cfg.camera = CameraConfig::simple(32, 32, 64.0, 8.0);
        cfg
    }

    #[test]
    fn fronto_parallel_plate_is_flat() {
        let scene = build_scene(&plate_scene(0.0)).unwrap();
        let f = render_depth(&scene, 0.0, 0).unwrap();
        assert!(f.depth_mm.iter().all(|&d| d == 1000.0 || d == 0.0));
        assert!(f.valid_count() > 400);
    }

    #[test]
    fn ellipsoid_center_depth() {
        let cfg = SceneConfig::seated_torso(0.0, 0.25, 1.0);
        let scene = build_scene(&cfg).unwrap();
        let f = render_depth(&scene, 0.0, 0).unwrap();
        // principal point lies between four pixels; the ellipsoid is flat enough there
        let d = f.at(160, 80);
        assert!((d - 1000.0).abs() <= 1.0, "{d}");
    }

    #[test]
    fn breathing_plate_center_pixel_tracks_waveform() {
        let scene = build_scene(&plate_scene(0.0025)).unwrap();
        let (seq, gt) = render_sequence(&scene).unwrap();
        let trace: Vec<f64> = seq.frames().iter().map(|f| f.at(16, 16) as f64).collect();
        let hi = trace.iter().cloned().fold(f64::MIN, f64::max);
        let lo = trace.iter().cloned().fold(f64::MAX, f64::min);
        assert!(((hi - lo) / 2.0 - 2.5).abs() <= 0.5, "{hi} {lo}");
        // outward motion of a radar-facing plate shortens the range
        for (k, &t) in gt.times.iter().enumerate() {
            let expected = -0.0025 * (2.0 * std::f64::consts::PI * 0.25 * t).sin();
            assert!((gt.los_displacement[0][k] - expected).abs() < 1e-12);
            assert!((trace[k] - 1000.0 - expected * 1e3).abs() <= 0.5 + 1e-9);
        }
    }

    #[test]
    fn zero_amplitude_is_static() {
        let scene = build_scene(&plate_scene(0.0)).unwrap();
        let a = render_depth(&scene, 0.0, 0).unwrap();
        let b = render_depth(&scene, 3.3, 1).unwrap();
        assert_eq!(a.depth_mm, b.depth_mm);
    }

    #[test]
    fn trace_waveform_passes_samples_through() {
        let times: Vec<f64> = (0..20).map(|i| i as f64 * 0.5).collect();
        let values: Vec<f64> = times
            .iter()
            .map(|t| 0.001 * (t * 1.3).sin() + 0.0005 * (t * 0.2).cos())
            .collect();
        let w = Waveform::Trace {
            path: None,
            times: times.clone(),
            values: values.clone(),
        };
        for (t, v) in times.iter().zip(&values) {
            assert_eq!(w.value(*t), *v);
        }
    }

    #[test]
    fn invisible_scene_errors() {
        let mut cfg = plate_scene(0.0);
        cfg.parts[0].center = [-1.0, 0.0, 0.0];
        let scene = build_scene(&cfg).unwrap();
        assert!(render_depth(&scene, 0.0, 0).is_err());
    }

    #[test]
    fn jitter_is_seeded() {
        let mut cfg = plate_scene(0.0);
        cfg.depth_jitter_mm = 2.0;
        cfg.seed = 4;
        let scene = build_scene(&cfg).unwrap();
        let a = render_depth(&scene, 0.0, 3).unwrap();
        let b = render_depth(&scene, 0.0, 3).unwrap();
        assert_eq!(a.depth_mm, b.depth_mm);
        assert!(a.depth_mm.iter().any(|&d| d != 1000.0));
    }

    #[test]
    fn overlap_detection() {
        let cfg = SceneConfig::seated_torso(0.0, 0.25, 1.0);
        let scene = build_scene(&cfg).unwrap();
        assert!(!parts_overlap(&scene.parts[0], &scene.parts[1]));
        let mut moved = scene.parts[1].clone();
        moved.center = scene.parts[0].center + Vec3::new(0.0, 0.2, 0.0);
        assert!(parts_overlap(&scene.parts[0], &moved));
    }

    #[test]
    fn invalid_frequency_rejected() {
        let mut cfg = plate_scene(0.001);
        cfg.parts[0].breathing.as_mut().unwrap().waveform = Waveform::sinusoid(0.001, 1.0, 0.0);
        let err = build_scene(&cfg).unwrap_err();
        assert!(err.to_string().contains("frequency"));
        let _ = PartConfig::clone(&cfg.parts[0]);
    }
}
