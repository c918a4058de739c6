use std::f64::consts::PI;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::dsp::beamform::{ImageCell, RadarImage};
use crate::dsp::butterworth::Butterworth;
use crate::error::{Error, Result};
use crate::series::TimeSeries;

pub const HIGHPASS_ORDER: usize = 5;
pub const HIGHPASS_CUTOFF_HZ: f64 = 0.05;

/// Phase-derived displacement at the strongest image cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisplacementTrace {
    pub cell: ImageCell,
    /// Range increase since the first sample, meters.
    pub d: TimeSeries,
    /// `d` after zero-phase high-pass filtering.
    pub d_hf: TimeSeries,
    /// Number of sample steps whose wrapped phase change exceeded 0.9π.
    pub suspect_jumps: usize,
}

impl DisplacementTrace {
    pub fn write_csv(&self, out: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["time_s", "d_m", "d_hf_m"])?;
        for i in 0..self.d.len() {
            w.write_record([
                format!("{:.4}", self.d.time(i)),
                format!("{:.9e}", self.d.values[i]),
                format!("{:.9e}", self.d_hf.values[i]),
            ])?;
        }
        w.flush().map_err(|e| Error::Format(e.to_string()))?;
        Ok(())
    }
}

/// Unwraps a phase sequence; returns the count of steps near ±π.
pub fn unwrap_phase(phase: &[f64]) -> (Vec<f64>, usize) {
    let mut out = Vec::with_capacity(phase.len());
    let mut offset = 0.0;
    let mut suspect = 0;
    for (i, &p) in phase.iter().enumerate() {
        if i > 0 {
            let raw = p - phase[i - 1];
            let wrapped = (raw + PI).rem_euclid(2.0 * PI) - PI;
            if wrapped.abs() > 0.9 * PI {
                suspect += 1;
            }
            offset += wrapped - raw;
        }
        out.push(p + offset);
    }
    (out, suspect)
}

/// Zero-phase fifth-order Butterworth high-pass at 0.05 Hz.
pub fn highpass(series: &TimeSeries) -> TimeSeries {
    let f = Butterworth::highpass(HIGHPASS_ORDER, HIGHPASS_CUTOFF_HZ, series.rate);
    TimeSeries::new(series.start, series.rate, f.filtfilt(&series.values))
}

/// Displacement at a chosen cell: (λ/4π)·unwrapped phase of Ĩ, anchored at zero.
pub fn displacement_at(image: &RadarImage, cell: ImageCell, wavelength: f64) -> Result<DisplacementTrace> {
    let z = image.dynamic(&cell);
    if z.iter().all(|c| c.norm() == 0.0) {
        return Err(Error::Domain("selected image cell carries no dynamic signal".into()));
    }
    let phase: Vec<f64> = z.iter().map(|c| c.arg()).collect();
    let (unwrapped, suspect_jumps) = unwrap_phase(&phase);
    if suspect_jumps > 0 {
        log::warn!("{suspect_jumps} phase steps near ±π; displacement may contain unwrap errors");
    }
    let p0 = unwrapped[0];
    let d = TimeSeries::new(
        image.slow.start,
        image.slow.rate,
        unwrapped.iter().map(|p| wavelength * (p - p0) / (4.0 * PI)).collect(),
    );
    let d_hf = highpass(&d);
    Ok(DisplacementTrace {
        cell,
        d,
        d_hf,
        suspect_jumps,
    })
}

/// Displacement at the argmax cell of the image power.
pub fn extract_displacement(image: &RadarImage, wavelength: f64) -> Result<DisplacementTrace> {
    let cell = image
        .argmax()
        .ok_or_else(|| Error::Domain("radar image power is zero everywhere".into()))?;
    displacement_at(image, cell, wavelength)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unwrap_restores_ramp() {
        let truth: Vec<f64> = (0..200).map(|i| 0.3 * i as f64).collect();
        let wrapped: Vec<f64> = truth.iter().map(|p| (p + PI).rem_euclid(2.0 * PI) - PI).collect();
        let (u, suspect) = unwrap_phase(&wrapped);
        assert_eq!(suspect, 0);
        for (a, b) in u.iter().zip(&truth) {
            assert!((a - b - (u[0] - truth[0])).abs() < 1e-9);
        }
    }

    #[test]
    fn drift_is_attenuated() {
        let rate = 100.0;
        let n = 6000;
        let sine: Vec<f64> = (0..n)
            .map(|i| 0.0025 * (2.0 * PI * 0.25 * i as f64 / rate).sin())
            .collect();
        let drift: Vec<f64> = (0..n).map(|i| 0.001 * i as f64 / rate).collect();
        let total: Vec<f64> = sine.iter().zip(&drift).map(|(a, b)| a + b).collect();
        let hf = highpass(&TimeSeries::new(0.0, rate, total));
        let mid = n / 6..5 * n / 6;
        let resid: Vec<f64> = mid.clone().map(|i| hf.values[i] - sine[i]).collect();
        let resid_rms = (resid.iter().map(|v| v * v).sum::<f64>() / resid.len() as f64).sqrt();
        let drift_mid: Vec<f64> = mid.map(|i| drift[i]).collect();
        let mean = drift_mid.iter().sum::<f64>() / drift_mid.len() as f64;
        let drift_rms = (drift_mid.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / drift_mid.len() as f64).sqrt();
        assert!(20.0 * (resid_rms / drift_rms).log10() < -20.0);
    }

    #[test]
    fn highpass_output_has_little_very_low_frequency_power() {
        use rustfft::{num_complex::Complex64, FftPlanner};
        let rate = 100.0;
        let n = 6000;
        let x: Vec<f64> = (0..n)
            .map(|i| {
                let t = i as f64 / rate;
                0.003 * (2.0 * PI * 0.25 * t).sin() + 0.002 * (2.0 * PI * 0.01 * t).sin() + 0.0005 * t
            })
            .collect();
        let hf = highpass(&TimeSeries::new(0.0, rate, x));
        let mut buf: Vec<Complex64> = hf.values.iter().map(|v| Complex64::new(*v, 0.0)).collect();
        FftPlanner::new().plan_fft_forward(n).process(&mut buf);
        let total: f64 = buf.iter().map(|c| c.norm_sqr()).sum();
        let df = rate / n as f64;
        let low: f64 = buf
            .iter()
            .enumerate()
            .filter(|(k, _)| {
                let f = (*k.min(&(n - k))) as f64 * df;
                f < 0.02
            })
            .map(|(_, c)| c.norm_sqr())
            .sum();
        assert!(low / total < 1e-3, "{}", low / total);
    }
}
