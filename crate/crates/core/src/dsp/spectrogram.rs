use std::io::Write;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::dsp::window::taylor_default;
use crate::error::{Error, Result};
use crate::fmcw_sim::IFCube;

pub const DEFAULT_WINDOW_S: f64 = 0.5;
pub const DEFAULT_HOP_S: f64 = 0.1;
pub const DEFAULT_FLOOR_DB: f64 = -60.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrogramOptions {
    pub channel: usize,
    /// Range gate `[lo, hi]`, meters.
    pub gate: (f64, f64),
    pub window_s: f64,
    pub hop_s: f64,
    /// Fast-time sample used for the slow-time signal; `None` picks the chirp midpoint.
    pub fast_index: Option<usize>,
    pub floor_db: f64,
}

impl SpectrogramOptions {
    pub fn new(gate: (f64, f64)) -> Self {
        Self {
            channel: 0,
            gate,
            window_s: DEFAULT_WINDOW_S,
            hop_s: DEFAULT_HOP_S,
            fast_index: None,
            floor_db: DEFAULT_FLOOR_DB,
        }
    }
}

/// Doppler spectrogram in dB relative to its maximum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrogramData {
    /// Window-center times, seconds.
    pub times: Vec<f64>,
    /// Doppler frequencies, Hz, ascending.
    pub freqs: Vec<f64>,
    /// dB values laid out `[time][freq]`, clamped at `floor_db`.
    pub power_db: Vec<f64>,
    pub window_s: f64,
    pub hop_s: f64,
    pub gate: (f64, f64),
    pub floor_db: f64,
}

impl SpectrogramData {
    pub fn at(&self, t: usize, f: usize) -> f64 {
        self.power_db[t * self.freqs.len() + f]
    }

    /// Frequency of the strongest bin in each time column.
    pub fn ridge(&self) -> Vec<f64> {
        let nf = self.freqs.len();
        self.power_db
            .chunks(nf)
            .map(|col| {
                let (i, _) = col
                    .iter()
                    .enumerate()
                    .fold((0, f64::NEG_INFINITY), |b, (i, &v)| if v > b.1 { (i, v) } else { b });
                self.freqs[i]
            })
            .collect()
    }

    pub fn write_csv(&self, out: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["time_s", "freq_hz", "x_db"])?;
        for (ti, t) in self.times.iter().enumerate() {
            for (fi, f) in self.freqs.iter().enumerate() {
                w.write_record([format!("{t:.3}"), format!("{f:.3}"), format!("{:.3}", self.at(ti, fi))])?;
            }
        }
        w.flush().map_err(|e| Error::Format(e.to_string()))?;
        Ok(())
    }
}

/// Range-gated slow-time signal at one fast-time sample.
///
/// The per-sample slow-time mean is removed, each chirp is Taylor-windowed
/// and transformed, bins outside the gate are zeroed, and the inverse
/// transform is read back at `fast_index` (window gain divided out).
pub fn gated_slow_signal(
    cube: &IFCube,
    channel: usize,
    gate: (f64, f64),
    fast_index: Option<usize>,
) -> Result<Vec<Complex64>> {
    if channel >= cube.channels {
        return Err(Error::Validation(format!("channel {channel} out of range")));
    }
    let n = cube.fast_samples;
    let dr = cube.radar.range_resolution();
    let max_range = (n - 1) as f64 * dr;
    if !(gate.0 <= gate.1) || gate.0 > max_range || gate.1 < 0.0 {
        return Err(Error::Domain(format!(
            "range gate [{:.3}, {:.3}] m lies outside the 0..{max_range:.3} m range axis",
            gate.0, gate.1
        )));
    }
    let tau0 = fast_index.unwrap_or(n / 2);
    if tau0 >= n {
        return Err(Error::Validation(format!("fast-time index {tau0} out of range")));
    }
    let ns = cube.slow.samples;
    let mut mean = vec![Complex64::new(0.0, 0.0); n];
    for s in 0..ns {
        for (m, x) in mean.iter_mut().zip(cube.chirp(channel, s)) {
            *m += x;
        }
    }
    mean.iter_mut().for_each(|m| *m /= ns.max(1) as f64);

    let window = taylor_default(n);
    let fft = FftPlanner::new().plan_fft_forward(n);
    let bins: Vec<usize> = (0..n)
        .filter(|&k| {
            let r = k as f64 * dr;
            r >= gate.0 && r <= gate.1
        })
        .collect();
    let twiddle: Vec<Complex64> = bins
        .iter()
        .map(|&k| Complex64::cis(2.0 * std::f64::consts::PI * (k * tau0 % n) as f64 / n as f64))
        .collect();
    let norm = 1.0 / (n as f64 * window[tau0]);
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    Ok((0..ns)
        .map(|s| {
            for (((b, x), m), w) in buf.iter_mut().zip(cube.chirp(channel, s)).zip(&mean).zip(&window) {
                *b = (x - m) * w;
            }
            fft.process(&mut buf);
            bins.iter().zip(&twiddle).map(|(&k, tw)| buf[k] * tw).sum::<Complex64>() * norm
        })
        .collect())
}

/// Short-time Fourier spectrogram of the gated slow-time signal.
pub fn spectrogram(cube: &IFCube, opts: &SpectrogramOptions) -> Result<SpectrogramData> {
    let rate = cube.slow.rate;
    let len = (opts.window_s * rate).round() as usize;
    let hop = ((opts.hop_s * rate).round() as usize).max(1);
    if len < 2 {
        return Err(Error::Validation("spectrogram window shorter than two samples".into()));
    }
    if len > cube.slow.samples {
        return Err(Error::Domain(format!(
            "spectrogram window {:.2} s is longer than the {:.2} s signal",
            opts.window_s,
            cube.slow.samples as f64 / rate
        )));
    }
    let z = gated_slow_signal(cube, opts.channel, opts.gate, opts.fast_index)?;
    let window = taylor_default(len);
    let fft = FftPlanner::new().plan_fft_forward(len);
    let frames = (z.len() - len) / hop + 1;
    let mut power = Vec::with_capacity(frames * len);
    let mut times = Vec::with_capacity(frames);
    let mut buf = vec![Complex64::new(0.0, 0.0); len];
    let half = len / 2;
    for f in 0..frames {
        let s0 = f * hop;
        for ((b, x), w) in buf.iter_mut().zip(&z[s0..s0 + len]).zip(&window) {
            *b = x * w;
        }
        fft.process(&mut buf);
        // shift so that frequencies ascend from −rate/2
        power.extend((0..len).map(|k| buf[(k + len - half) % len].norm_sqr()));
        times.push(cube.slow.time(s0) + 0.5 * (len - 1) as f64 / rate);
    }
    let freqs: Vec<f64> = (0..len).map(|k| (k as f64 - half as f64) * rate / len as f64).collect();
    let max = power.iter().cloned().fold(0.0, f64::max);
    let power_db = power
        .iter()
        .map(|p| {
            if max > 0.0 && *p > 0.0 {
                (10.0 * (p / max).log10()).max(opts.floor_db)
            } else {
                opts.floor_db
            }
        })
        .collect();
    Ok(SpectrogramData {
        times,
        freqs,
        power_db,
        window_s: opts.window_s,
        hop_s: opts.hop_s,
        gate: opts.gate,
        floor_db: opts.floor_db,
    })
}
