use serde::{Deserialize, Serialize};

use super::mesh::{depth_to_mesh, SurfaceMesh};
use super::transform::ExtrinsicTransform;
use crate::error::{Error, Result};
use crate::Vec3;

/// Operating range of the depth sensor, millimeters.
pub const MIN_DEPTH_MM: f32 = 250.0;
pub const MAX_DEPTH_MM: f32 = 2880.0;

/// Nominal depth frame rate, Hz.
pub const DEFAULT_DEPTH_RATE_HZ: f64 = 15.0;

/// Pinhole intrinsics in pixels. Pixel centers sit on integer coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Intrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
}

impl Intrinsics {
    pub fn validate(&self) -> Result<()> {
        if !(self.fx > 0.0 && self.fy > 0.0 && self.cx.is_finite() && self.cy.is_finite()) {
            return Err(Error::Validation(format!(
                "invalid intrinsics fx={} fy={} cx={} cy={}",
                self.fx, self.fy, self.cx, self.cy
            )));
        }
        Ok(())
    }

    /// Camera-frame point for pixel `(u, v)` at optical depth `z` meters.
    pub fn back_project(&self, u: f64, v: f64, z: f64) -> Vec3 {
        Vec3::new((u - self.cx) * z / self.fx, (v - self.cy) * z / self.fy, z)
    }

    /// Unit ray direction (camera frame) through pixel `(u, v)`.
    pub fn ray(&self, u: f64, v: f64) -> Vec3 {
        Vec3::new((u - self.cx) / self.fx, (v - self.cy) / self.fy, 1.0).normalize()
    }

    /// Pixel coordinates of a camera-frame point in front of the camera.
    pub fn project(&self, p: &Vec3) -> Option<(f64, f64)> {
        (p.z > 0.0).then(|| (self.fx * p.x / p.z + self.cx, self.fy * p.y / p.z + self.cy))
    }
}

/// One depth image. Depths are millimeters along the optical axis; 0 marks
/// an invalid pixel. Storage is row-major, `depth_mm[v * width + u]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthFrame {
    pub width: usize,
    pub height: usize,
    pub timestamp: f64,
    pub depth_mm: Vec<f32>,
    pub intrinsics: Intrinsics,
}

impl DepthFrame {
    pub fn new(
        width: usize,
        height: usize,
        timestamp: f64,
        depth_mm: Vec<f32>,
        intrinsics: Intrinsics,
    ) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Validation(format!(
                "depth frame must be non-empty, got {width}x{height}"
            )));
        }
        if depth_mm.len() != width * height {
            return Err(Error::Validation(format!(
                "depth buffer has {} samples, expected {}",
                depth_mm.len(),
                width * height
            )));
        }
        if !timestamp.is_finite() {
            return Err(Error::Validation("depth frame timestamp not finite".into()));
        }
        Ok(Self {
            width,
            height,
            timestamp,
            depth_mm,
            intrinsics,
        })
    }

    #[inline]
    pub fn at(&self, u: usize, v: usize) -> f32 {
        self.depth_mm[v * self.width + u]
    }

    #[inline]
    pub fn is_valid(&self, u: usize, v: usize) -> bool {
        let d = self.at(u, v);
        d > 0.0 && d.is_finite()
    }

    pub fn valid_count(&self) -> usize {
        self.depth_mm.iter().filter(|d| **d > 0.0).count()
    }

    /// Camera-frame point (meters) of pixel `(u, v)`, if valid.
    pub fn point(&self, u: usize, v: usize) -> Option<Vec3> {
        self.is_valid(u, v).then(|| {
            self.intrinsics
                .back_project(u as f64, v as f64, self.at(u, v) as f64 * 1e-3)
        })
    }

    /// Checks the sensor operating range; valid pixels outside it are rejected.
    pub fn validate_range(&self) -> Result<()> {
        for (i, &d) in self.depth_mm.iter().enumerate() {
            if d == 0.0 {
                continue;
            }
            if !d.is_finite() || !(MIN_DEPTH_MM..=MAX_DEPTH_MM).contains(&d) {
                return Err(Error::Validation(format!(
                    "pixel ({}, {}) depth {d} mm outside [{MIN_DEPTH_MM}, {MAX_DEPTH_MM}] mm",
                    i % self.width,
                    i / self.width
                )));
            }
        }
        Ok(())
    }

    pub fn scaled(&self, factor: f32) -> DepthFrame {
        DepthFrame {
            depth_mm: self.depth_mm.iter().map(|d| d * factor).collect(),
            ..self.clone()
        }
    }
}

/// Timestamped depth frames with a nominal rate.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthSequence {
    frames: Vec<DepthFrame>,
    nominal_rate: f64,
}

impl DepthSequence {
    /// Builds a sequence, enforcing ordering and spacing invariants.
    pub fn new(frames: Vec<DepthFrame>, nominal_rate: f64) -> Result<Self> {
        if frames.is_empty() {
            return Err(Error::Validation("depth sequence has no frames".into()));
        }
        if !(nominal_rate > 0.0 && nominal_rate.is_finite()) {
            return Err(Error::Validation(format!(
                "nominal depth rate must be positive, got {nominal_rate}"
            )));
        }
        let (w, h) = (frames[0].width, frames[0].height);
        let period = 1.0 / nominal_rate;
        for (i, pair) in frames.windows(2).enumerate() {
            let dt = pair[1].timestamp - pair[0].timestamp;
            if dt <= 0.0 {
                return Err(Error::Validation(format!(
                    "timestamps not strictly increasing at frame {}",
                    i + 1
                )));
            }
            if (dt - period).abs() > 0.2 * period {
                return Err(Error::Validation(format!(
                    "frame spacing {dt:.4} s at frame {} deviates more than 20% from 1/{nominal_rate} s",
                    i + 1
                )));
            }
        }
        if let Some(f) = frames.iter().find(|f| f.width != w || f.height != h) {
            return Err(Error::Validation(format!(
                "frame at t={} is {}x{}, sequence is {w}x{h}",
                f.timestamp, f.width, f.height
            )));
        }
        Ok(Self { frames, nominal_rate })
    }

    pub fn frames(&self) -> &[DepthFrame] {
        &self.frames
    }

    pub fn into_frames(self) -> Vec<DepthFrame> {
        self.frames
    }

    pub fn nominal_rate(&self) -> f64 {
        self.nominal_rate
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn start_time(&self) -> f64 {
        self.frames[0].timestamp
    }

    pub fn end_time(&self) -> f64 {
        self.frames[self.frames.len() - 1].timestamp
    }

    /// Last minus first timestamp.
    pub fn duration(&self) -> f64 {
        self.end_time() - self.start_time()
    }

    pub fn validate_range(&self) -> Result<()> {
        self.frames.iter().try_for_each(DepthFrame::validate_range)
    }

    /// Index of the frame nearest `t`; ties go to the earlier frame.
    pub fn nearest_index(&self, t: f64) -> Result<usize> {
        if !(t >= self.start_time() && t <= self.end_time()) {
            return Err(Error::Domain(format!(
                "t = {t} s outside sequence span [{}, {}] s",
                self.start_time(),
                self.end_time()
            )));
        }
        let idx = self.frames.partition_point(|f| f.timestamp < t);
        if idx == 0 {
            return Ok(0);
        }
        if idx == self.frames.len() {
            return Ok(idx - 1);
        }
        let before = t - self.frames[idx - 1].timestamp;
        let after = self.frames[idx].timestamp - t;
        Ok(if after < before { idx } else { idx - 1 })
    }
}

/// Per-pixel mean over the frames in which the pixel is valid.
///
/// Pixels valid in fewer than `min_valid_fraction` of the frames come out
/// invalid (0). The result is stamped at the sequence midpoint.
pub fn time_average_depth(seq: &DepthSequence, min_valid_fraction: f64) -> DepthFrame {
    let first = &seq.frames()[0];
    let n_px = first.width * first.height;
    let mut sum = vec![0.0f64; n_px];
    let mut count = vec![0u32; n_px];
    for frame in seq.frames() {
        for (i, &d) in frame.depth_mm.iter().enumerate() {
            if d > 0.0 && d.is_finite() {
                sum[i] += d as f64;
                count[i] += 1;
            }
        }
    }
    let n_frames = seq.len() as f64;
    let depth_mm = sum
        .iter()
        .zip(&count)
        .map(|(&s, &c)| {
            if c == 0 || (c as f64) < min_valid_fraction * n_frames {
                0.0
            } else {
                (s / c as f64) as f32
            }
        })
        .collect();
    DepthFrame {
        width: first.width,
        height: first.height,
        timestamp: 0.5 * (seq.start_time() + seq.end_time()),
        depth_mm,
        intrinsics: first.intrinsics,
    }
}

/// Surface mesh at time `t`, built from the nearest depth frame.
pub fn surface_at(
    seq: &DepthSequence,
    t: f64,
    extrinsics: &ExtrinsicTransform,
    discontinuity_mm: f64,
) -> Result<SurfaceMesh> {
    let idx = seq.nearest_index(t)?;
    depth_to_mesh(&seq.frames()[idx], extrinsics, discontinuity_mm)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn intr() -> Intrinsics {
        Intrinsics {
            fx: 100.0,
            fy: 100.0,
            cx: 1.5,
            cy: 1.5,
        }
    }

    fn frame(t: f64, value: f32) -> DepthFrame {
        DepthFrame::new(4, 4, t, vec![value; 16], intr()).unwrap()
    }

    fn seq(values: &[f32]) -> DepthSequence {
        let frames = values
            .iter()
            .enumerate()
            .map(|(i, v)| frame(i as f64 / 15.0, *v))
            .collect();
        DepthSequence::new(frames, 15.0).unwrap()
    }

    #[test]
    fn rejects_empty_and_non_monotone() {
        assert!(matches!(DepthSequence::new(vec![], 15.0), Err(Error::Validation(_))));
        let frames = vec![frame(0.0, 1000.0), frame(0.0, 1000.0)];
        assert!(matches!(DepthSequence::new(frames, 15.0), Err(Error::Validation(_))));
        let frames = vec![frame(0.0, 1000.0), frame(0.2, 1000.0)];
        assert!(DepthSequence::new(frames, 15.0).is_err());
    }

    #[test]
    fn duration_of_900_frames() {
        let s = seq(&vec![1000.0; 900]);
        assert!((s.duration() - 899.0 / 15.0).abs() < 1e-9);
    }

    #[test]
    fn constant_sequence_average_is_idempotent() {
        let s = seq(&[1234.0; 7]);
        let avg = time_average_depth(&s, 0.5);
        assert_eq!(avg.depth_mm, s.frames()[0].depth_mm);
        assert!((avg.timestamp - 3.0 / 15.0).abs() < 1e-12);
    }

    #[test]
    fn invalid_samples_are_excluded_from_mean() {
        let s = seq(&[1000.0, 0.0, 1000.0, 0.0]);
        let avg = time_average_depth(&s, 0.5);
        assert!(avg.depth_mm.iter().all(|d| *d == 1000.0));
        let s = seq(&[1000.0, 0.0, 0.0, 0.0]);
        let avg = time_average_depth(&s, 0.5);
        assert!(avg.depth_mm.iter().all(|d| *d == 0.0));
    }

    #[test]
    fn noisy_pixel_mean_within_standard_error() {
        use rand::SeedableRng;
        use rand_distr::{Distribution, Normal};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let noise = Normal::new(0.0, 2.0).unwrap();
        let values: Vec<f32> = (0..900).map(|_| 1000.0 + noise.sample(&mut rng) as f32).collect();
        let avg = time_average_depth(&seq(&values), 0.5);
        // σ/√N = 0.067 mm; 0.3 mm is ~4.5 standard errors
        assert!((avg.depth_mm[0] - 1000.0).abs() < 0.3);
    }

    #[test]
    fn range_validation() {
        assert!(frame(0.0, 1000.0).validate_range().is_ok());
        assert!(frame(0.0, 0.0).validate_range().is_ok());
        assert!(frame(0.0, 100.0).validate_range().is_err());
        assert!(frame(0.0, 3000.0).validate_range().is_err());
    }

    #[test]
    fn nearest_frame_rule() {
        let s = seq(&[1000.0; 5]);
        assert_eq!(s.nearest_index(0.0).unwrap(), 0);
        assert_eq!(s.nearest_index(1.0 / 15.0).unwrap(), 1);
        assert_eq!(s.nearest_index(1.4 / 15.0).unwrap(), 1);
        assert_eq!(s.nearest_index(1.6 / 15.0).unwrap(), 2);
        assert!(matches!(s.nearest_index(s.duration() + 1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn back_projection_inverts_projection() {
        let i = intr();
        let p = i.back_project(3.0, 0.0, 1.2);
        let (u, v) = i.project(&p).unwrap();
        assert!((u - 3.0).abs() < 1e-12 && v.abs() < 1e-12);
    }
}
