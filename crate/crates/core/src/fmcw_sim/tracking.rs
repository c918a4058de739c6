use nalgebra::{Matrix6, Vector6};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::em_scatter::{AntennaArray, ScatteringCenterSet};
use crate::error::{Error, Result};
use crate::geometry::{DepthFrame, DepthSequence, ExtrinsicTransform};
use crate::Vec3;

/// Uniform slow-time sampling grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlowTimeGrid {
    pub start: f64,
    pub rate: f64,
    pub samples: usize,
}

impl SlowTimeGrid {
    pub fn new(start: f64, rate: f64, samples: usize) -> Self {
        Self { start, rate, samples }
    }

    /// Grid at `rate` covering `[start, start + duration]`.
    pub fn covering(start: f64, duration: f64, rate: f64) -> Self {
        let samples = (duration * rate + 1e-9).floor() as usize + 1;
        Self { start, rate, samples }
    }

    pub fn time(&self, i: usize) -> f64 {
        self.start + i as f64 / self.rate
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.samples).map(|i| self.time(i)).collect()
    }

    pub fn duration(&self) -> f64 {
        self.samples.saturating_sub(1) as f64 / self.rate
    }
}

/// Per-antenna, per-center range histories on a slow-time grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RangeTrackSet {
    pub num_antennas: usize,
    pub num_centers: usize,
    pub grid: SlowTimeGrid,
    /// Rate of the geometry the tracks were derived from, Hz.
    pub source_rate: f64,
    /// Ranges in meters, laid out `[center][antenna][slow]`.
    pub ranges: Vec<f64>,
    /// For each track, the index of its center in the set it was built from.
    pub center_indices: Vec<usize>,
    /// Tracks (by position in this set) whose range varies by more than the motion bound.
    pub flagged: Vec<usize>,
}

/// Largest physiologically plausible range excursion over a recording, meters.
pub const MAX_TRACK_VARIATION: f64 = 0.1;

impl RangeTrackSet {
    pub fn new(
        num_antennas: usize,
        num_centers: usize,
        grid: SlowTimeGrid,
        source_rate: f64,
        ranges: Vec<f64>,
    ) -> Result<Self> {
        if ranges.len() != num_antennas * num_centers * grid.samples {
            return Err(Error::Validation(format!(
                "range buffer holds {} values, expected {}×{}×{}",
                ranges.len(),
                num_centers,
                num_antennas,
                grid.samples
            )));
        }
        if ranges.iter().any(|r| !(*r > 0.0 && r.is_finite())) {
            return Err(Error::Validation("ranges must be positive and finite".into()));
        }
        let mut set = Self {
            num_antennas,
            num_centers,
            grid,
            source_rate,
            ranges,
            center_indices: (0..num_centers).collect(),
            flagged: Vec::new(),
        };
        set.flag_excessive_motion();
        Ok(set)
    }

    /// Time-invariant tracks ‖p_m − q_n‖.
    pub fn constant(centers: &ScatteringCenterSet, array: &AntennaArray, grid: SlowTimeGrid) -> Result<Self> {
        Self::from_motion(centers, array, grid, |_, _| 0.0)
    }

    /// Tracks ‖p_m − q_n‖ + offset(n, t).
    pub fn from_motion<F>(
        centers: &ScatteringCenterSet,
        array: &AntennaArray,
        grid: SlowTimeGrid,
        offset: F,
    ) -> Result<Self>
    where
        F: Fn(usize, f64) -> f64,
    {
        let virt = array.virtual_positions();
        let mut ranges = Vec::with_capacity(centers.len() * virt.len() * grid.samples);
        for (n, c) in centers.centers.iter().enumerate() {
            for p in &virt {
                let r0 = (p - c.position).norm();
                ranges.extend((0..grid.samples).map(|i| r0 + offset(n, grid.time(i))));
            }
        }
        Self::new(virt.len(), centers.len(), grid, grid.rate, ranges)
    }

    pub fn track(&self, center: usize, antenna: usize) -> &[f64] {
        let s = self.grid.samples;
        let off = (center * self.num_antennas + antenna) * s;
        &self.ranges[off..off + s]
    }

    pub fn range(&self, center: usize, antenna: usize, slow: usize) -> f64 {
        self.ranges[(center * self.num_antennas + antenna) * self.grid.samples + slow]
    }

    fn flag_excessive_motion(&mut self) {
        self.flagged = (0..self.num_centers)
            .filter(|&n| {
                (0..self.num_antennas).any(|m| {
                    let t = self.track(n, m);
                    let hi = t.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                    let lo = t.iter().cloned().fold(f64::INFINITY, f64::min);
                    hi - lo > MAX_TRACK_VARIATION
                })
            })
            .collect();
        for &n in &self.flagged {
            log::warn!("range track {n} varies by more than {MAX_TRACK_VARIATION} m");
        }
    }

    /// The subset of `centers` that these tracks refer to, in track order.
    pub fn tracked_centers(&self, centers: &ScatteringCenterSet) -> ScatteringCenterSet {
        centers.retain_indices(&self.center_indices)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrackingOptions {
    /// Radius around each center whose surface points enter the local fit, meters.
    pub patch_radius: f64,
    /// Centers missing in a larger fraction of frames are dropped.
    pub max_miss_fraction: f64,
    /// Output slow-time rate, Hz.
    pub slow_rate: f64,
}

impl TrackingOptions {
    pub fn new(patch_radius: f64, slow_rate: f64) -> Self {
        Self {
            patch_radius,
            max_miss_fraction: 0.1,
            slow_rate,
        }
    }
}

/// Tracks each center's line-of-sight surface point through the depth sequence.
///
/// For every frame the surface points within `patch_radius` of the ray from
/// the array centroid through the center are fitted with a quadratic height
/// field along that ray; the fitted height on the ray gives the intersection.
/// Per-frame ranges to every virtual antenna are then linearly interpolated
/// onto the slow-time grid.
pub fn track_ranges(
    centers: &ScatteringCenterSet,
    seq: &DepthSequence,
    extrinsics: &ExtrinsicTransform,
    array: &AntennaArray,
    opts: &TrackingOptions,
) -> Result<RangeTrackSet> {
    if !(opts.patch_radius > 0.0) {
        return Err(Error::Validation("patch radius must be positive".into()));
    }
    let origin = array.centroid();
    let virt = array.virtual_positions();
    let frame_times: Vec<f64> = seq.frames().iter().map(|f| f.timestamp).collect();
    let grid = SlowTimeGrid::covering(seq.start_time(), seq.duration(), opts.slow_rate);

    let per_center: Vec<Option<Vec<f64>>> = centers
        .centers
        .par_iter()
        .enumerate()
        .map(|(n, c)| {
            let hits: Vec<Option<Vec3>> = seq
                .frames()
                .iter()
                .map(|f| intersect_patch(f, extrinsics, &origin, &c.position, opts.patch_radius))
                .collect();
            let misses = hits.iter().filter(|h| h.is_none()).count();
            if misses as f64 > opts.max_miss_fraction * hits.len() as f64 {
                log::warn!(
                    "center {n} at {:.3?} missed in {misses}/{} frames; dropped",
                    c.position.as_slice(),
                    hits.len()
                );
                return None;
            }
            let mut out = Vec::with_capacity(virt.len() * grid.samples);
            for p in &virt {
                let (t, r): (Vec<f64>, Vec<f64>) = frame_times
                    .iter()
                    .zip(&hits)
                    .filter_map(|(t, h)| h.map(|x| (*t, (p - x).norm())))
                    .unzip();
                out.extend(interpolate(&t, &r, &grid));
            }
            Some(out)
        })
        .collect();

    let mut ranges = Vec::new();
    let mut kept = Vec::new();
    for (n, tr) in per_center.into_iter().enumerate() {
        if let Some(tr) = tr {
            ranges.extend(tr);
            kept.push(n);
        }
    }
    let mut set = RangeTrackSet::new(virt.len(), kept.len(), grid, seq.nominal_rate(), ranges)?;
    set.center_indices = kept;
    Ok(set)
}

/// Linear interpolation with constant extrapolation at both ends.
fn interpolate(t: &[f64], v: &[f64], grid: &SlowTimeGrid) -> Vec<f64> {
    let mut j = 0;
    (0..grid.samples)
        .map(|i| {
            let x = grid.time(i);
            if t.len() == 1 || x <= t[0] {
                return v[0];
            }
            if x >= t[t.len() - 1] {
                return v[v.len() - 1];
            }
            while t[j + 1] < x {
                j += 1;
            }
            let f = (x - t[j]) / (t[j + 1] - t[j]);
            v[j] * (1.0 - f) + v[j + 1] * f
        })
        .collect()
}

const MIN_FIT_POINTS: usize = 6;

/// Surface point on the ray `origin → center` from one depth frame, if the
/// local patch is sampled well enough to fit.
pub fn intersect_patch(
    frame: &DepthFrame,
    extrinsics: &ExtrinsicTransform,
    origin: &Vec3,
    center: &Vec3,
    patch_radius: f64,
) -> Option<Vec3> {
    let axis = (center - origin).normalize();
    let e1 = if axis.z.abs() < 0.9 {
        axis.cross(&Vec3::z())
    } else {
        axis.cross(&Vec3::x())
    }
    .normalize();
    let e2 = axis.cross(&e1);
    let a_ref = (center - origin).dot(&axis);

    let cam = extrinsics.inverse_apply(center);
    let intr = &frame.intrinsics;
    let (u0, v0) = intr.project(&cam)?;
    let half_u = (1.5 * patch_radius * intr.fx / cam.z).ceil() + 2.0;
    let half_v = (1.5 * patch_radius * intr.fy / cam.z).ceil() + 2.0;
    let u_lo = (u0 - half_u).floor().max(0.0) as usize;
    let v_lo = (v0 - half_v).floor().max(0.0) as usize;
    let u_hi = ((u0 + half_u).ceil() as isize).min(frame.width as isize - 1);
    let v_hi = ((v0 + half_v).ceil() as isize).min(frame.height as isize - 1);
    if u_hi < 0 || v_hi < 0 {
        return None;
    }

    let mut pts = Vec::new();
    let mut nearest = f64::INFINITY;
    for v in v_lo..=v_hi as usize {
        for u in u_lo..=u_hi as usize {
            let Some(pc) = frame.point(u, v) else { continue };
            let d = extrinsics.apply(&pc) - origin;
            let b = d.dot(&e1) / patch_radius;
            let c = d.dot(&e2) / patch_radius;
            let h = d.dot(&axis) - a_ref;
            // a cylinder around the ray, so that membership does not depend on depth noise
            if b.hypot(c) >= 1.0 || h.abs() >= patch_radius {
                continue;
            }
            nearest = nearest.min(b.hypot(c));
            pts.push((b, c, h));
        }
    }
    if pts.len() < MIN_FIT_POINTS || nearest > 0.5 {
        return None;
    }
    let mut h0 = fit_height(&pts)?;
    // one pass of residual-based outlier rejection
    let resid: Vec<f64> = pts.iter().map(|&(b, c, a)| a - eval(&h0, b, c)).collect();
    let rms = (resid.iter().map(|r| r * r).sum::<f64>() / resid.len() as f64).sqrt();
    let tol = 3.0 * rms.max(1e-3);
    let inliers: Vec<(f64, f64, f64)> = pts
        .iter()
        .zip(&resid)
        .filter(|(_, r)| r.abs() <= tol)
        .map(|(p, _)| *p)
        .collect();
    if inliers.len() < pts.len() && inliers.len() >= MIN_FIT_POINTS {
        h0 = fit_height(&inliers)?;
    }
    Some(origin + axis * (a_ref + h0[0]))
}

fn basis(b: f64, c: f64) -> Vector6<f64> {
    Vector6::new(1.0, b, c, b * b, b * c, c * c)
}

fn eval(coef: &Vector6<f64>, b: f64, c: f64) -> f64 {
    coef.dot(&basis(b, c))
}

fn fit_height(pts: &[(f64, f64, f64)]) -> Option<Vector6<f64>> {
    let mut ata = Matrix6::<f64>::zeros();
    let mut atb = Vector6::<f64>::zeros();
    for &(b, c, a) in pts {
        let phi = basis(b, c);
        ata += phi * phi.transpose();
        atb += phi * a;
    }
    if let Some(ch) = ata.cholesky() {
        let x = ch.solve(&atb);
        if x.iter().all(|v| v.is_finite()) {
            return Some(x);
        }
    }
    // collinear patches: fall back to a plane
    let mut ata3 = nalgebra::Matrix3::<f64>::zeros();
    let mut atb3 = Vec3::zeros();
    for &(b, c, a) in pts {
        let phi = Vec3::new(1.0, b, c);
        ata3 += phi * phi.transpose();
        atb3 += phi * a;
    }
    let x = ata3.cholesky()?.solve(&atb3);
    Some(Vector6::new(x[0], x[1], x[2], 0.0, 0.0, 0.0))
}
