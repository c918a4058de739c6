use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;

use crate::dsp::window::taylor_default;
use crate::error::{Error, Result};
use crate::fmcw_sim::{IFCube, SlowTimeGrid};

/// Fast-time spectra for a contiguous block of range bins.
///
/// Storage is `[channel][slow][bin]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RangeProfiles {
    pub channels: usize,
    pub slow: SlowTimeGrid,
    /// Range of each stored bin, meters.
    pub range_axis: Vec<f64>,
    /// FFT index of the first stored bin.
    pub first_bin: usize,
    pub data: Vec<Complex64>,
}

impl RangeProfiles {
    pub fn bins(&self) -> usize {
        self.range_axis.len()
    }

    pub fn profile(&self, channel: usize, slow: usize) -> &[Complex64] {
        let nb = self.bins();
        let off = (channel * self.slow.samples + slow) * nb;
        &self.data[off..off + nb]
    }

    pub fn get(&self, channel: usize, slow: usize, bin: usize) -> Complex64 {
        self.data[(channel * self.slow.samples + slow) * self.bins() + bin]
    }

    pub fn total_power(&self) -> f64 {
        self.data.iter().map(|x| x.norm_sqr()).sum()
    }

    /// Subtracts, per channel and bin, the mean over slow time.
    pub fn remove_static(&mut self) {
        let nb = self.bins();
        let ns = self.slow.samples;
        if ns == 0 {
            return;
        }
        self.data.par_chunks_mut(ns * nb).for_each(|block| {
            let mut mean = vec![Complex64::new(0.0, 0.0); nb];
            for row in block.chunks(nb) {
                for (m, v) in mean.iter_mut().zip(row) {
                    *m += v;
                }
            }
            mean.iter_mut().for_each(|m| *m /= ns as f64);
            for row in block.chunks_mut(nb) {
                for (v, m) in row.iter_mut().zip(&mean) {
                    *v -= m;
                }
            }
        });
    }

    /// Index of the stored bin nearest `range`.
    pub fn nearest_bin(&self, range: f64) -> usize {
        self.range_axis
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - range).abs().total_cmp(&(b.1 - range).abs()))
            .map(|(i, _)| i)
            .unwrap_or(0)
    }
}

/// Taylor-windowed fast-time DFT of every chirp, all bins kept.
pub fn range_compress(cube: &IFCube) -> RangeProfiles {
    compress(cube, 0, cube.fast_samples)
}

/// Like [`range_compress`] but keeps only bins whose range lies in `[r_lo, r_hi]`.
pub fn range_compress_window(cube: &IFCube, r_lo: f64, r_hi: f64) -> Result<RangeProfiles> {
    let dr = cube.radar.range_resolution();
    let lo = (r_lo / dr).ceil().max(0.0) as usize;
    let hi = ((r_hi / dr).floor() as usize).min(cube.fast_samples - 1);
    if !(r_hi >= r_lo) || lo > hi {
        return Err(Error::Domain(format!(
            "range window [{r_lo:.3}, {r_hi:.3}] m holds no bins (max {:.3} m)",
            (cube.fast_samples - 1) as f64 * dr
        )));
    }
    Ok(compress(cube, lo, hi + 1))
}

fn compress(cube: &IFCube, lo: usize, hi: usize) -> RangeProfiles {
    let n = cube.fast_samples;
    let nb = hi - lo;
    let window = taylor_default(n);
    let fft = FftPlanner::new().plan_fft_forward(n);
    let dr = cube.radar.range_resolution();
    let mut data = vec![Complex64::new(0.0, 0.0); cube.channels * cube.slow.samples * nb];
    data.par_chunks_mut(nb).zip(cube.data.par_chunks(n)).for_each_init(
        || {
            (
                vec![Complex64::new(0.0, 0.0); n],
                vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()],
            )
        },
        |(buf, scratch), (out, chirp)| {
            for ((b, x), w) in buf.iter_mut().zip(chirp).zip(&window) {
                *b = x * w;
            }
            fft.process_with_scratch(buf, scratch);
            out.copy_from_slice(&buf[lo..hi]);
        },
    );
    RangeProfiles {
        channels: cube.channels,
        slow: cube.slow,
        range_axis: (lo..hi).map(|k| k as f64 * dr).collect(),
        first_bin: lo,
        data,
    }
}
