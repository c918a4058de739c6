//! Similarity scores between simulated and reference radar products.

use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dsp::{RadarImage, SpectrogramData};
use crate::error::{Error, Result};
use crate::fmcw_sim::RESPIRATION_BAND_HZ;
use crate::series::TimeSeries;

/// Pearson correlation coefficient.
pub fn pearson(a: &[f64], b: &[f64]) -> Result<f64> {
    normalized_correlation(a, b, true)
}

/// Σab / (‖a‖‖b‖), optionally after removing each input's mean.
pub fn normalized_correlation(a: &[f64], b: &[f64], remove_mean: bool) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Validation(format!(
            "correlation inputs differ in length ({} vs {})",
            a.len(),
            b.len()
        )));
    }
    if a.is_empty() {
        return Err(Error::UndefinedCorrelation("empty input".into()));
    }
    let (ma, mb) = if remove_mean { (mean(a), mean(b)) } else { (0.0, 0.0) };
    let mut ab = 0.0;
    let mut aa = 0.0;
    let mut bb = 0.0;
    for (x, y) in a.iter().zip(b) {
        let (x, y) = (x - ma, y - mb);
        ab += x * y;
        aa += x * x;
        bb += y * y;
    }
    if aa == 0.0 || bb == 0.0 {
        return Err(Error::UndefinedCorrelation("an input has zero norm".into()));
    }
    Ok((ab / (aa.sqrt() * bb.sqrt())).clamp(-1.0, 1.0))
}

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len().max(1) as f64
}

/// Root-mean-square difference.
pub fn rms_error(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() || a.is_empty() {
        return Err(Error::Validation(
            "RMS error needs two equal-length, non-empty inputs".into(),
        ));
    }
    Ok((a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>() / a.len() as f64).sqrt())
}

/// Region of a radar image compared by [`image_correlation`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationRegion {
    /// Target range r*, meters.
    pub target_range: f64,
    /// Half-width r₀ of the range window, meters.
    #[serde(default = "default_r0")]
    pub range_half_width: f64,
    #[serde(default = "default_angle_limits")]
    pub azimuth_deg: (f64, f64),
    #[serde(default = "default_angle_limits")]
    pub elevation_deg: (f64, f64),
}

fn default_r0() -> f64 {
    0.5
}

fn default_angle_limits() -> (f64, f64) {
    (-45.0, 45.0)
}

impl EvaluationRegion {
    pub fn new(target_range: f64) -> Self {
        Self {
            target_range,
            range_half_width: default_r0(),
            azimuth_deg: default_angle_limits(),
            elevation_deg: default_angle_limits(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.range_half_width >= 0.0 && self.target_range > self.range_half_width) {
            return Err(Error::Validation(format!(
                "evaluation region needs r* > r0 >= 0 (r* = {}, r0 = {})",
                self.target_range, self.range_half_width
            )));
        }
        if self.azimuth_deg.0 > self.azimuth_deg.1 || self.elevation_deg.0 > self.elevation_deg.1 {
            return Err(Error::Validation("evaluation angle limits are reversed".into()));
        }
        Ok(())
    }

    pub fn range_window(&self) -> (f64, f64) {
        (
            self.target_range - self.range_half_width,
            self.target_range + self.range_half_width,
        )
    }

    fn contains(&self, r: f64, el: f64, az: f64) -> bool {
        let (lo, hi) = self.range_window();
        r >= lo - 1e-9
            && r <= hi + 1e-9
            && az >= self.azimuth_deg.0 - 1e-9
            && az <= self.azimuth_deg.1 + 1e-9
            && el >= self.elevation_deg.0 - 1e-9
            && el <= self.elevation_deg.1 + 1e-9
    }
}

/// Extent of the shift search in [`image_correlation`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShiftGrid {
    pub max_range_m: f64,
    pub max_angle_deg: f64,
}

impl Default for ShiftGrid {
    fn default() -> Self {
        Self {
            max_range_m: 0.2,
            max_angle_deg: 5.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImageCorrelation {
    pub rho: f64,
    pub range_shift_m: f64,
    pub azimuth_shift_deg: f64,
    pub elevation_shift_deg: f64,
}

fn axis_step(axis: &[f64]) -> f64 {
    if axis.len() < 2 {
        f64::INFINITY
    } else {
        (axis[1] - axis[0]).abs()
    }
}

fn same_axis(a: &[f64], b: &[f64]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-9)
}

/// Best masked normalized inner product of `a` with shifted copies of `b`.
///
/// The mask applies to `a`; samples of `b` shifted in from outside the image
/// count as zero. Shifts are whole bins up to the limits of `shifts`.
pub fn image_correlation(
    a: &RadarImage,
    b: &RadarImage,
    region: &EvaluationRegion,
    shifts: &ShiftGrid,
) -> Result<ImageCorrelation> {
    region.validate()?;
    if !(same_axis(&a.range_axis, &b.range_axis)
        && same_axis(&a.azimuth_deg, &b.azimuth_deg)
        && same_axis(&a.elevation_deg, &b.elevation_deg))
    {
        return Err(Error::Domain("radar images are not on identical axes".into()));
    }
    let (nr, ne, na) = a.shape();
    let mut mask = Vec::new();
    for r in 0..nr {
        for e in 0..ne {
            for z in 0..na {
                if region.contains(a.range_axis[r], a.elevation_deg[e], a.azimuth_deg[z]) {
                    mask.push((r, e, z));
                }
            }
        }
    }
    if mask.is_empty() {
        return Err(Error::Domain("evaluation region contains no image cells".into()));
    }
    let norm_a = mask
        .iter()
        .map(|&(r, e, z)| a.power_at(r, e, z).powi(2))
        .sum::<f64>()
        .sqrt();
    if norm_a == 0.0 {
        return Err(Error::UndefinedCorrelation(
            "reference image is zero inside the region".into(),
        ));
    }
    let span = |max: f64, step: f64| (max / step + 1e-9).floor() as i64;
    let sr = span(shifts.max_range_m, axis_step(&a.range_axis));
    let se = span(shifts.max_angle_deg, axis_step(&a.elevation_deg));
    let sa = span(shifts.max_angle_deg, axis_step(&a.azimuth_deg));
    let fetch = |r: i64, e: i64, z: i64| {
        if r < 0 || e < 0 || z < 0 || r >= nr as i64 || e >= ne as i64 || z >= na as i64 {
            0.0
        } else {
            b.power_at(r as usize, e as usize, z as usize)
        }
    };
    let mut best: Option<(f64, i64, i64, i64)> = None;
    for dr in -sr..=sr {
        for de in -se..=se {
            for dz in -sa..=sa {
                let mut num = 0.0;
                let mut nb = 0.0;
                for &(r, e, z) in &mask {
                    let v = fetch(r as i64 + dr, e as i64 + de, z as i64 + dz);
                    num += a.power_at(r, e, z) * v;
                    nb += v * v;
                }
                let rho = if nb > 0.0 { num / (norm_a * nb.sqrt()) } else { 0.0 };
                let better = match best {
                    None => true,
                    Some((b0, r0, e0, z0)) => {
                        rho > b0 + 1e-12
                            || ((rho - b0).abs() <= 1e-12
                                && dr.abs() + de.abs() + dz.abs() < r0.abs() + e0.abs() + z0.abs())
                    }
                };
                if better {
                    best = Some((rho, dr, de, dz));
                }
            }
        }
    }
    let (rho, dr, de, dz) = best.expect("shift grid includes zero");
    let step_or_zero = |axis: &[f64]| if axis.len() < 2 { 0.0 } else { axis_step(axis) };
    Ok(ImageCorrelation {
        rho: rho.clamp(-1.0, 1.0),
        range_shift_m: dr as f64 * step_or_zero(&a.range_axis),
        azimuth_shift_deg: dz as f64 * step_or_zero(&a.azimuth_deg),
        elevation_shift_deg: de as f64 * step_or_zero(&a.elevation_deg),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DisplacementScores {
    pub rho: f64,
    /// RMS difference, meters.
    pub epsilon: f64,
}

/// Correlation and RMS error between two displacement traces.
///
/// Correlation is the plain normalized inner product unless `remove_mean` is set.
pub fn displacement_metrics(d: &TimeSeries, d_hat: &TimeSeries, remove_mean: bool) -> Result<DisplacementScores> {
    check_rates(d, d_hat)?;
    if d.len() != d_hat.len() {
        return Err(Error::Validation(format!(
            "traces differ in length ({} vs {})",
            d.len(),
            d_hat.len()
        )));
    }
    Ok(DisplacementScores {
        rho: normalized_correlation(&d.values, &d_hat.values, remove_mean)?,
        epsilon: rms_error(&d.values, &d_hat.values)?,
    })
}

fn check_rates(a: &TimeSeries, b: &TimeSeries) -> Result<()> {
    if (a.rate - b.rate).abs() > 1e-9 * a.rate {
        return Err(Error::Validation(format!(
            "sample rates differ ({} vs {} Hz)",
            a.rate, b.rate
        )));
    }
    Ok(())
}

/// Zero-lag normalized correlation of two floor-clamped dB spectrograms on identical axes.
pub fn spectrogram_correlation(x: &SpectrogramData, x_hat: &SpectrogramData) -> Result<f64> {
    if !(same_axis(&x.times, &x_hat.times) && same_axis(&x.freqs, &x_hat.freqs)) {
        return Err(Error::Domain("spectrograms are not on identical axes".into()));
    }
    normalized_correlation(&x.power_db, &x_hat.power_db, false)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LaggedCorrelation {
    pub rho: f64,
    /// Delay of the second signal relative to the first at the maximum, seconds.
    pub lag_s: f64,
}

/// Maximum normalized cross-correlation over delays within ±`max_lag_s`.
///
/// Each delay is scored on the overlapping samples only, and delays leaving
/// less than half of the shorter signal overlapping are skipped.
pub fn reference_cross_correlation(d: &TimeSeries, h: &TimeSeries, max_lag_s: f64) -> Result<LaggedCorrelation> {
    check_rates(d, h)?;
    let rate = d.rate;
    let offset = ((h.start - d.start) * rate).round() as i64;
    let max_lag = (max_lag_s * rate).round() as i64;
    let min_overlap = (d.len().min(h.len()) as f64 * 0.5).ceil() as usize;
    let mut best: Option<LaggedCorrelation> = None;
    for lag in -max_lag..=max_lag {
        // d at time t pairs with h at time t + lag/rate
        let shift = lag - offset;
        let i0 = (-shift).max(0) as usize;
        let i1 = (h.len() as i64 - shift).min(d.len() as i64);
        if i1 <= i0 as i64 || ((i1 as usize) - i0) < min_overlap.max(1) {
            continue;
        }
        let i1 = i1 as usize;
        let a = &d.values[i0..i1];
        let b: Vec<f64> = (i0..i1).map(|i| h.values[(i as i64 + shift) as usize]).collect();
        let rho = match normalized_correlation(a, &b, false) {
            Ok(r) => r,
            Err(Error::UndefinedCorrelation(_)) => continue,
            Err(e) => return Err(e),
        };
        if best.is_none_or(|bst| rho > bst.rho + 1e-12) {
            best = Some(LaggedCorrelation {
                rho,
                lag_s: lag as f64 / rate,
            });
        }
    }
    best.ok_or_else(|| Error::UndefinedCorrelation("no lag with sufficient overlap and non-zero energy".into()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateEstimate {
    pub frequency: f64,
    /// Peak over median in-band periodogram power, dB.
    pub peak_to_median_db: f64,
    pub low_confidence: bool,
}

/// Respiration rate as the strongest periodogram bin (k / T spacing) in `band`.
pub fn respiration_rate(signal: &TimeSeries, band: (f64, f64)) -> Result<RateEstimate> {
    let n = signal.len();
    let duration = n as f64 / signal.rate;
    if duration < 10.0 {
        return Err(Error::Domain(format!(
            "respiration rate needs at least 10 s of signal, got {duration:.2} s"
        )));
    }
    let m = signal.mean();
    let k_lo = (band.0 * duration).ceil() as usize;
    let k_hi = (band.1 * duration).floor() as usize;
    if k_lo > k_hi {
        return Err(Error::Domain("respiration band holds no frequency bins".into()));
    }
    let powers: Vec<(f64, f64)> = (k_lo..=k_hi)
        .map(|k| {
            let w = -2.0 * PI * k as f64 / n as f64;
            let (mut re, mut im) = (0.0, 0.0);
            for (i, x) in signal.values.iter().enumerate() {
                let (s, c) = (w * i as f64).sin_cos();
                re += (x - m) * c;
                im += (x - m) * s;
            }
            (k as f64 / duration, re * re + im * im)
        })
        .collect();
    let (frequency, peak) = powers
        .iter()
        .cloned()
        .fold((0.0, f64::NEG_INFINITY), |b, p| if p.1 > b.1 { p } else { b });
    let mut sorted: Vec<f64> = powers.iter().map(|p| p.1).collect();
    sorted.sort_by(f64::total_cmp);
    let median = if sorted.len() % 2 == 1 {
        sorted[sorted.len() / 2]
    } else {
        0.5 * (sorted[sorted.len() / 2 - 1] + sorted[sorted.len() / 2])
    };
    let peak_to_median_db = if median > 0.0 {
        10.0 * (peak / median).log10()
    } else if peak > 0.0 {
        f64::INFINITY
    } else {
        0.0
    };
    let low_confidence = peak_to_median_db < 3.0;
    if low_confidence {
        log::warn!(
            "in-band spectrum is flat ({peak_to_median_db:.1} dB peak over median); rate estimate is unreliable"
        );
    }
    Ok(RateEstimate {
        frequency,
        peak_to_median_db,
        low_confidence,
    })
}

/// Respiration rate with the default band.
pub fn respiration_rate_default(signal: &TimeSeries) -> Result<RateEstimate> {
    respiration_rate(signal, RESPIRATION_BAND_HZ)
}

/// RMS absolute error and mean relative error over `(reference, estimate)` pairs.
pub fn rate_errors(pairs: &[(f64, f64)]) -> Result<(f64, f64)> {
    if pairs.is_empty() {
        return Err(Error::Validation("no rate pairs".into()));
    }
    if pairs.iter().any(|(r, _)| *r <= 0.0) {
        return Err(Error::Validation("reference rates must be positive".into()));
    }
    let n = pairs.len() as f64;
    let rms = (pairs.iter().map(|(r, e)| (r - e).powi(2)).sum::<f64>() / n).sqrt();
    let rel = pairs.iter().map(|(r, e)| (r - e).abs() / r).sum::<f64>() / n;
    Ok((rms, rel))
}

/// All scores from one comparison of two IF cubes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub subject: String,
    pub condition: String,
    pub image: ImageCorrelation,
    pub displacement: DisplacementScores,
    pub displacement_hf: DisplacementScores,
    pub rho_s: f64,
    /// Cross-correlation of each high-passed displacement with the reference signal.
    pub reference: Option<ReferenceScores>,
    /// Respiration rates (first cube, second cube), Hz.
    pub rates_hz: (f64, f64),
    pub rate_low_confidence: (bool, bool),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceScores {
    pub rho_t_a: LaggedCorrelation,
    pub rho_t_b: LaggedCorrelation,
    pub rate_hz: f64,
}

impl MetricsReport {
    pub fn write_json(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn read_json(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// One CSV row per report plus rate-error rows aggregated over all reports.
///
/// Displacement errors are written in millimeters.
pub fn write_summary_csv(reports: &[MetricsReport], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "subject",
        "condition",
        "rho_i",
        "rho_d",
        "eps_d_mm",
        "rho_d_hf",
        "eps_d_hf_mm",
        "rho_s",
        "rho_t_a",
        "rho_t_b",
        "f_rr_a_hz",
        "f_rr_b_hz",
    ])?;
    let opt = |v: Option<f64>| v.map(|x| format!("{x:.4}")).unwrap_or_default();
    for r in reports {
        w.write_record([
            r.subject.clone(),
            r.condition.clone(),
            format!("{:.4}", r.image.rho),
            format!("{:.4}", r.displacement.rho),
            format!("{:.4}", r.displacement.epsilon * 1e3),
            format!("{:.4}", r.displacement_hf.rho),
            format!("{:.4}", r.displacement_hf.epsilon * 1e3),
            format!("{:.4}", r.rho_s),
            opt(r.reference.as_ref().map(|x| x.rho_t_a.rho)),
            opt(r.reference.as_ref().map(|x| x.rho_t_b.rho)),
            format!("{:.4}", r.rates_hz.0),
            format!("{:.4}", r.rates_hz.1),
        ])?;
    }
    let pairs = |pick: fn(&MetricsReport) -> Option<(f64, f64)>| reports.iter().filter_map(pick).collect::<Vec<_>>();
    let groups: [(&str, Vec<(f64, f64)>); 3] = [
        ("a_vs_b", pairs(|r| Some(r.rates_hz))),
        (
            "reference_vs_a",
            pairs(|r| r.reference.as_ref().map(|x| (x.rate_hz, r.rates_hz.0))),
        ),
        (
            "reference_vs_b",
            pairs(|r| r.reference.as_ref().map(|x| (x.rate_hz, r.rates_hz.1))),
        ),
    ];
    for (name, p) in groups {
        if let Ok((rms, rel)) = rate_errors(&p) {
            let mut row = vec![String::new(); 12];
            row[0] = "rate_error".into();
            row[1] = name.into();
            row[10] = format!("{rms:.4}");
            row[11] = format!("{rel:.4}");
            w.write_record(&row)?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sine(freq: f64, phase: f64, amp: f64, secs: f64, rate: f64) -> TimeSeries {
        let n = (secs * rate) as usize;
        TimeSeries::new(
            0.0,
            rate,
            (0..n)
                .map(|i| amp * (2.0 * PI * freq * i as f64 / rate + phase).sin())
                .collect(),
        )
    }

    #[test]
    fn displacement_identities() {
        let d = sine(0.25, 0.0, 0.003, 60.0, 100.0);
        let s = displacement_metrics(&d, &d, false).unwrap();
        assert!((s.rho - 1.0).abs() < 1e-12 && s.epsilon == 0.0);
        let neg = TimeSeries::new(0.0, 100.0, d.values.iter().map(|v| -v).collect());
        let s = displacement_metrics(&d, &neg, false).unwrap();
        let rms = (d.values.iter().map(|v| v * v).sum::<f64>() / d.len() as f64).sqrt();
        assert!((s.rho + 1.0).abs() < 1e-12);
        assert!((s.epsilon - 2.0 * rms).abs() < 1e-12);
        let q = sine(0.25, PI / 2.0, 0.003, 60.0, 100.0);
        let s = displacement_metrics(&d, &q, false).unwrap();
        assert!(s.rho.abs() < 1e-9);
        assert!((s.epsilon - 0.003).abs() < 1e-9);
        let zero = TimeSeries::new(0.0, 100.0, vec![0.0; d.len()]);
        assert!(matches!(
            displacement_metrics(&d, &zero, false),
            Err(Error::UndefinedCorrelation(_))
        ));
    }

    #[test]
    fn lagged_correlation_finds_delay() {
        let d = sine(0.3, 0.0, 1.0, 40.0, 100.0);
        let r = reference_cross_correlation(&d, &d, 2.0).unwrap();
        assert!((r.rho - 1.0).abs() < 1e-12 && r.lag_s == 0.0);
        // a chirp-like signal has a unique best lag
        let x: Vec<f64> = (0..4000).map(|i| ((i as f64 / 100.0).powi(2) * 0.05).sin()).collect();
        let a = TimeSeries::new(0.0, 100.0, x.clone());
        let delayed = TimeSeries::new(0.5, 100.0, x);
        let r = reference_cross_correlation(&a, &delayed, 2.0).unwrap();
        assert!((r.rho - 1.0).abs() < 1e-12);
        assert!((r.lag_s - 0.5).abs() < 1e-12);
    }

    #[test]
    fn rate_of_pure_tone() {
        let s = sine(0.25, 0.4, 1.0, 60.0, 100.0);
        let r = respiration_rate_default(&s).unwrap();
        assert!((r.frequency - 0.25).abs() <= 1.0 / 60.0 + 1e-12);
        assert!(!r.low_confidence);
        // a stronger out-of-band tone does not capture the estimate
        let mixed = TimeSeries::new(
            0.0,
            100.0,
            s.values
                .iter()
                .zip(&sine(1.0, 0.0, 5.0, 60.0, 100.0).values)
                .map(|(a, b)| a + b)
                .collect(),
        );
        assert!((respiration_rate_default(&mixed).unwrap().frequency - 0.25).abs() < 1e-9);
        assert!(respiration_rate_default(&sine(0.25, 0.0, 1.0, 5.0, 100.0)).is_err());
    }

    #[test]
    fn rate_error_arithmetic() {
        assert_eq!(rate_errors(&[(0.25, 0.25)]).unwrap(), (0.0, 0.0));
        let (e, rel) = rate_errors(&[(0.20, 0.25)]).unwrap();
        assert!((e - 0.05).abs() < 1e-12 && (rel - 0.25).abs() < 1e-12);
    }
}
