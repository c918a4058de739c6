use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dsp::range::RangeProfiles;
use crate::dsp::window::taylor_default;
use crate::em_scatter::radar::steering_direction;
use crate::em_scatter::{AntennaArray, ArrayLayout, RadarConfig};
use crate::error::{Error, Result};
use crate::fmcw_sim::SlowTimeGrid;
use crate::Vec3;

/// Azimuth and elevation sample points, degrees.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AngleGrid {
    pub azimuth_deg: Vec<f64>,
    pub elevation_deg: Vec<f64>,
}

fn symmetric(max: f64, step: f64) -> Vec<f64> {
    let n = (max / step + 1e-9).floor() as i64;
    (-n..=n).map(|i| i as f64 * step).collect()
}

impl AngleGrid {
    pub fn uniform(az_max: f64, az_step: f64, el_max: f64, el_step: f64) -> Self {
        Self {
            azimuth_deg: symmetric(az_max, az_step),
            elevation_deg: if el_max > 0.0 {
                symmetric(el_max, el_step)
            } else {
                vec![0.0]
            },
        }
    }

    /// 1° over ±60° azimuth for line arrays; 2° over ±60° × ±40° for planar ones.
    pub fn default_for(array: &AntennaArray) -> Self {
        match array.layout {
            ArrayLayout::Linear => Self::uniform(60.0, 1.0, 0.0, 1.0),
            ArrayLayout::Planar => Self::uniform(60.0, 2.0, 40.0, 2.0),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.azimuth_deg.is_empty() || self.elevation_deg.is_empty() {
            return Err(Error::Validation("angle grid is empty".into()));
        }
        if self
            .azimuth_deg
            .iter()
            .chain(&self.elevation_deg)
            .any(|a| !(a.abs() <= 90.0))
        {
            return Err(Error::Validation("angle grid must stay within ±90°".into()));
        }
        Ok(())
    }

    fn step(axis: &[f64]) -> f64 {
        if axis.len() < 2 {
            0.0
        } else {
            (axis[axis.len() - 1] - axis[0]).abs() / (axis.len() - 1) as f64
        }
    }
}

/// Location of one image cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImageCell {
    pub range_bin: usize,
    pub elevation_bin: usize,
    pub azimuth_bin: usize,
    pub range: f64,
    pub elevation_deg: f64,
    pub azimuth_deg: f64,
}

/// Beamformed radar image with its static component removed.
///
/// `power` holds the slow-time mean of |Ĩ|² laid out `[range][elevation][azimuth]`.
/// The dynamic image Ĩ for a single cell is produced on demand from the
/// retained static-free range profiles.
#[derive(Debug, Clone)]
pub struct RadarImage {
    pub range_axis: Vec<f64>,
    pub azimuth_deg: Vec<f64>,
    pub elevation_deg: Vec<f64>,
    pub slow: SlowTimeGrid,
    pub power: Vec<f64>,
    profiles: RangeProfiles,
    positions: Vec<Vec3>,
    channel_weights: Vec<f64>,
    wavenumber: f64,
}

impl RadarImage {
    pub fn shape(&self) -> (usize, usize, usize) {
        (self.range_axis.len(), self.elevation_deg.len(), self.azimuth_deg.len())
    }

    fn index(&self, r: usize, el: usize, az: usize) -> usize {
        (r * self.elevation_deg.len() + el) * self.azimuth_deg.len() + az
    }

    pub fn power_at(&self, r: usize, el: usize, az: usize) -> f64 {
        self.power[self.index(r, el, az)]
    }

    pub fn cell(&self, r: usize, el: usize, az: usize) -> ImageCell {
        ImageCell {
            range_bin: r,
            elevation_bin: el,
            azimuth_bin: az,
            range: self.range_axis[r],
            elevation_deg: self.elevation_deg[el],
            azimuth_deg: self.azimuth_deg[az],
        }
    }

    /// Cell with the largest power; ties resolve to the lowest index.
    pub fn argmax(&self) -> Option<ImageCell> {
        let (i, p) = self.power.iter().enumerate().fold(
            (0, f64::NEG_INFINITY),
            |best, (i, &p)| if p > best.1 { (i, p) } else { best },
        );
        if !(p > 0.0) {
            return None;
        }
        let (ne, na) = (self.elevation_deg.len(), self.azimuth_deg.len());
        Some(self.cell(i / (ne * na), (i / na) % ne, i % na))
    }

    fn beam_weights(&self, el_deg: f64, az_deg: f64) -> Vec<Complex64> {
        beam_weights(&self.positions, &self.channel_weights, self.wavenumber, el_deg, az_deg)
    }

    /// Static-free complex image Ĩ(t) at one cell.
    pub fn dynamic(&self, cell: &ImageCell) -> Vec<Complex64> {
        let b = self.beam_weights(cell.elevation_deg, cell.azimuth_deg);
        (0..self.slow.samples)
            .map(|t| {
                b.iter()
                    .enumerate()
                    .map(|(m, w)| w * self.profiles.get(m, t, cell.range_bin))
                    .sum()
            })
            .collect()
    }

    /// CSV rows `range_m,azimuth_deg,elevation_deg,ia_db` (dB relative to the
    /// image maximum, floored at −200 dB).
    pub fn write_csv(&self, out: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["range_m", "azimuth_deg", "elevation_deg", "ia_db"])?;
        let max = self.power.iter().cloned().fold(0.0, f64::max);
        for (r, range) in self.range_axis.iter().enumerate() {
            for (e, el) in self.elevation_deg.iter().enumerate() {
                for (a, az) in self.azimuth_deg.iter().enumerate() {
                    let p = self.power_at(r, e, a);
                    let db = if max > 0.0 && p > 0.0 {
                        (10.0 * (p / max).log10()).max(-200.0)
                    } else {
                        -200.0
                    };
                    w.write_record([
                        format!("{range:.5}"),
                        format!("{az:.3}"),
                        format!("{el:.3}"),
                        format!("{db:.3}"),
                    ])?;
                }
            }
        }
        w.flush().map_err(|e| Error::Format(e.to_string()))?;
        Ok(())
    }
}

fn beam_weights(positions: &[Vec3], weights: &[f64], k: f64, el_deg: f64, az_deg: f64) -> Vec<Complex64> {
    let u = steering_direction(az_deg.to_radians(), el_deg.to_radians());
    // conjugate of the two-way steering phase exp(−j2k u·p)
    positions
        .iter()
        .zip(weights)
        .map(|(p, w)| Complex64::from_polar(*w, 2.0 * k * u.dot(p)))
        .collect()
}

/// Aperture taper across virtual channels: Taylor along the line for
/// linear arrays, uniform for planar ones.
pub fn channel_weights(array: &AntennaArray) -> Vec<f64> {
    let m = array.num_virtual();
    match array.layout {
        ArrayLayout::Planar => vec![1.0; m],
        ArrayLayout::Linear => {
            let pos = array.virtual_positions();
            let mut order: Vec<usize> = (0..m).collect();
            order.sort_by(|&a, &b| pos[a].y.total_cmp(&pos[b].y));
            let taper = taylor_default(m);
            let mut w = vec![0.0; m];
            for (rank, &ch) in order.iter().enumerate() {
                w[ch] = taper[rank];
            }
            w
        }
    }
}

/// Delay-and-sum beamforming of static-free range profiles.
///
/// The slow-time mean is removed from `profiles` first; the mean image
/// power of every cell is then the quadratic form of its beam weights with
/// the per-bin channel covariance.
pub fn beamform(
    mut profiles: RangeProfiles,
    array: &AntennaArray,
    cfg: &RadarConfig,
    grid: &AngleGrid,
) -> Result<RadarImage> {
    grid.validate()?;
    if profiles.channels != array.num_virtual() {
        return Err(Error::Validation(format!(
            "{} profile channels for a {}-element virtual array",
            profiles.channels,
            array.num_virtual()
        )));
    }
    let beam = array.azimuth_beamwidth_deg(cfg.wavelength());
    let step = AngleGrid::step(&grid.azimuth_deg);
    if step > beam {
        log::warn!("azimuth grid step {step:.2}° is coarser than the {beam:.2}° array beamwidth");
    }
    profiles.remove_static();
    let positions = array.virtual_positions();
    let channel_weights = channel_weights(array);
    let k = cfg.wavenumber();
    let m = profiles.channels;
    let ns = profiles.slow.samples.max(1);

    let weights: Vec<Vec<Complex64>> = grid
        .elevation_deg
        .iter()
        .flat_map(|el| grid.azimuth_deg.iter().map(move |az| (*el, *az)))
        .map(|(el, az)| beam_weights(&positions, &channel_weights, k, el, az))
        .collect();

    let power: Vec<f64> = (0..profiles.bins())
        .into_par_iter()
        .flat_map_iter(|bin| {
            let mut cov = vec![Complex64::new(0.0, 0.0); m * m];
            for t in 0..profiles.slow.samples {
                for i in 0..m {
                    let yi = profiles.get(i, t, bin);
                    for j in 0..m {
                        cov[i * m + j] += yi * profiles.get(j, t, bin).conj();
                    }
                }
            }
            cov.iter_mut().for_each(|c| *c /= ns as f64);
            weights
                .iter()
                .map(|b| {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for i in 0..m {
                        for j in 0..m {
                            acc += b[i] * cov[i * m + j] * b[j].conj();
                        }
                    }
                    acc.re.max(0.0)
                })
                .collect::<Vec<_>>()
        })
        .collect();

    Ok(RadarImage {
        range_axis: profiles.range_axis.clone(),
        azimuth_deg: grid.azimuth_deg.clone(),
        elevation_deg: grid.elevation_deg.clone(),
        slow: profiles.slow,
        power,
        profiles,
        positions,
        channel_weights,
        wavenumber: k,
    })
}
