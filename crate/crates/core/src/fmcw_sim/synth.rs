use std::f64::consts::PI;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::em_scatter::{AntennaArray, RadarConfig, ScatteringCenterSet};
use crate::error::{Error, Result};
use crate::fmcw_sim::tracking::{RangeTrackSet, SlowTimeGrid};

/// Default receiver SNR, dB (noise ten times stronger than the echo).
pub const DEFAULT_SNR_DB: f64 = -20.0;

/// Complex IF samples for every virtual channel, chirp and fast-time sample.
///
/// Storage is `[channel][slow][fast]`, so each chirp is contiguous.
#[derive(Debug, Clone, PartialEq)]
pub struct IFCube {
    pub channels: usize,
    pub fast_samples: usize,
    pub slow: SlowTimeGrid,
    pub radar: RadarConfig,
    pub array: AntennaArray,
    /// SNR of the added noise, or `None` for a noiseless cube.
    pub noise_snr_db: Option<f64>,
    pub data: Vec<Complex64>,
}

impl IFCube {
    pub fn zeros(radar: RadarConfig, array: AntennaArray, slow: SlowTimeGrid) -> Self {
        let channels = array.num_virtual();
        let fast_samples = radar.fast_samples;
        Self {
            channels,
            fast_samples,
            slow,
            radar,
            array,
            noise_snr_db: None,
            data: vec![Complex64::new(0.0, 0.0); channels * slow.samples * fast_samples],
        }
    }

    pub fn slow_samples(&self) -> usize {
        self.slow.samples
    }

    pub fn validate(&self) -> Result<()> {
        self.radar.validate()?;
        if self.channels != self.array.num_virtual() || self.fast_samples != self.radar.fast_samples {
            return Err(Error::Validation(
                "IF cube dimensions disagree with radar configuration".into(),
            ));
        }
        if self.data.len() != self.channels * self.slow.samples * self.fast_samples {
            return Err(Error::Validation("IF cube buffer size mismatch".into()));
        }
        if self.data.iter().any(|x| !(x.re.is_finite() && x.im.is_finite())) {
            return Err(Error::Validation("IF cube contains non-finite samples".into()));
        }
        Ok(())
    }

    pub fn chirp(&self, channel: usize, slow: usize) -> &[Complex64] {
        let off = (channel * self.slow.samples + slow) * self.fast_samples;
        &self.data[off..off + self.fast_samples]
    }

    pub fn get(&self, channel: usize, fast: usize, slow: usize) -> Complex64 {
        self.data[(channel * self.slow.samples + slow) * self.fast_samples + fast]
    }

    pub fn mean_power(&self) -> f64 {
        mean_power(&self.data)
    }

    /// Writes one channel as CSV rows `slow,fast,re,im`.
    pub fn write_channel_csv(&self, channel: usize, out: impl std::io::Write) -> Result<()> {
        if channel >= self.channels {
            return Err(Error::Validation(format!("channel {channel} out of range")));
        }
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["slow", "fast", "re", "im"])?;
        for s in 0..self.slow.samples {
            for (f, x) in self.chirp(channel, s).iter().enumerate() {
                w.write_record([s.to_string(), f.to_string(), x.re.to_string(), x.im.to_string()])?;
            }
        }
        w.flush().map_err(|e| Error::Format(e.to_string()))?;
        Ok(())
    }
}

fn mean_power(data: &[Complex64]) -> f64 {
    if data.is_empty() {
        return 0.0;
    }
    data.iter().map(|x| x.norm_sqr()).sum::<f64>() / data.len() as f64
}

/// Sum of center echoes on every chirp, plus optional white noise.
///
/// Each center contributes A_n·exp(j4πR(f0 + γτ)/c) with R its range track at
/// that chirp. Noise is circular complex Gaussian scaled so the cube-wide
/// mean signal power over mean noise power equals `snr_db`. The noise
/// stream for chirp (m, t) is derived from `seed` alone, so results do not
/// depend on thread scheduling.
pub fn synthesize_if(
    tracks: &RangeTrackSet,
    centers: &ScatteringCenterSet,
    array: &AntennaArray,
    cfg: &RadarConfig,
    snr_db: Option<f64>,
    seed: u64,
) -> Result<IFCube> {
    cfg.validate()?;
    if tracks.num_centers != centers.len() {
        return Err(Error::Validation(format!(
            "{} range tracks for {} centers",
            tracks.num_centers,
            centers.len()
        )));
    }
    if tracks.num_antennas != array.num_virtual() {
        return Err(Error::Validation(format!(
            "tracks cover {} antennas, array has {}",
            tracks.num_antennas,
            array.num_virtual()
        )));
    }
    let mut cube = IFCube::zeros(cfg.clone(), array.clone(), tracks.grid);
    let n_fast = cfg.fast_samples;
    let n_slow = tracks.grid.samples;
    let amps: Vec<Complex64> = centers.centers.iter().map(|c| c.complex_amplitude()).collect();
    let f0 = cfg.start_frequency();
    let dtau = cfg.fast_time_step();
    let gamma = cfg.chirp_rate();
    let c = cfg.speed_of_light;

    cube.data.par_chunks_mut(n_fast).enumerate().for_each(|(idx, chirp)| {
        let (m, s) = (idx / n_slow, idx % n_slow);
        for (n, a) in amps.iter().enumerate() {
            let r = tracks.range(n, m, s);
            let mut x = *a * Complex64::cis(4.0 * PI * f0 * r / c);
            let step = Complex64::cis(4.0 * PI * gamma * r * dtau / c);
            for v in chirp.iter_mut() {
                *v += x;
                x *= step;
            }
        }
    });

    if let Some(snr) = snr_db {
        let mut signal = mean_power(&cube.data);
        if centers.is_empty() {
            log::warn!("no scattering centers; the IF cube contains noise only");
            signal = 1.0;
        }
        if signal > 0.0 {
            add_noise(&mut cube.data, n_fast, signal / 10f64.powf(snr / 10.0), seed);
        }
        cube.noise_snr_db = Some(snr);
    } else if centers.is_empty() {
        log::warn!("no scattering centers and no noise; the IF cube is all zeros");
    }
    Ok(cube)
}

/// Adds circular Gaussian noise of total variance `noise_power` per sample.
pub(crate) fn add_noise(data: &mut [Complex64], chirp_len: usize, noise_power: f64, seed: u64) {
    let sigma = (0.5 * noise_power).sqrt();
    data.par_chunks_mut(chirp_len).enumerate().for_each(|(idx, chirp)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(idx as u64);
        for v in chirp.iter_mut() {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            *v += Complex64::new(sigma * re, sigma * im);
        }
    });
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::em_scatter::{default_phase_term, ScatteringCenter};
    use crate::Vec3;

    fn centers(pos: &[Vec3]) -> ScatteringCenterSet {
        ScatteringCenterSet {
            centers: pos
                .iter()
                .map(|p| ScatteringCenter {
                    position: *p,
                    power: 1.0,
                    amplitude: 1.0,
                    phase_term: default_phase_term(),
                    vertex: 0,
                })
                .collect(),
            threshold_db: -20.0,
        }
    }

    fn cfg() -> RadarConfig {
        RadarConfig {
            fast_samples: 128,
            ..RadarConfig::default()
        }
    }

    #[test]
    fn single_center_is_pure_beat_tone() {
        let cfg = cfg();
        let array = AntennaArray::single_element();
        let set = centers(&[Vec3::new(1.3, 0.0, 0.0)]);
        let grid = SlowTimeGrid::new(0.0, 100.0, 3);
        let tracks = RangeTrackSet::constant(&set, &array, grid).unwrap();
        let cube = synthesize_if(&tracks, &set, &array, &cfg, None, 0).unwrap();
        let fb = cfg.beat_frequency(1.3);
        let phase0 = 4.0 * PI * cfg.start_frequency() * 1.3 / cfg.speed_of_light;
        for (i, x) in cube.chirp(0, 1).iter().enumerate() {
            let tau = i as f64 * cfg.fast_time_step();
            let expected = -Complex64::cis(phase0 + 2.0 * PI * fb * tau);
            assert!((x - expected).norm() < 1e-9);
        }
    }

    #[test]
    fn quarter_wave_pair_cancels() {
        // at the chirp start the two-way phase differs by π for a λ0/4 range step
        let cfg = cfg();
        let array = AntennaArray::single_element();
        let lam = cfg.speed_of_light / cfg.start_frequency();
        let set = centers(&[Vec3::new(1.0, 0.0, 0.0), Vec3::new(1.0 + lam / 4.0, 0.0, 0.0)]);
        let grid = SlowTimeGrid::new(0.0, 100.0, 2);
        let tracks = RangeTrackSet::constant(&set, &array, grid).unwrap();
        let cube = synthesize_if(&tracks, &set, &array, &cfg, None, 0).unwrap();
        let single = set.retain_indices(&[0]);
        let t1 = RangeTrackSet::constant(&single, &array, grid).unwrap();
        let one = synthesize_if(&t1, &single, &array, &cfg, None, 0).unwrap();
        // only the tiny beat-frequency offset survives at τ = 0
        assert!(cube.get(0, 0, 0).norm() < 1e-12);
        assert!(cube.mean_power() < 0.05 * one.mean_power());
    }

    #[test]
    fn noise_power_matches_snr() {
        let cfg = cfg();
        let array = AntennaArray::linear_3x4();
        let set = centers(&[Vec3::new(1.0, 0.1, 0.0)]);
        let grid = SlowTimeGrid::new(0.0, 100.0, 200);
        let tracks = RangeTrackSet::constant(&set, &array, grid).unwrap();
        let clean = synthesize_if(&tracks, &set, &array, &cfg, None, 5).unwrap();
        let noisy = synthesize_if(&tracks, &set, &array, &cfg, Some(-20.0), 5).unwrap();
        let noise: Vec<Complex64> = noisy.data.iter().zip(&clean.data).map(|(a, b)| a - b).collect();
        let ratio_db = 10.0 * (mean_power(&noise) / clean.mean_power()).log10();
        assert!((ratio_db - 20.0).abs() < 0.5, "{ratio_db}");
        let again = synthesize_if(&tracks, &set, &array, &cfg, Some(-20.0), 5).unwrap();
        assert_eq!(again.data, noisy.data);
        let other = synthesize_if(&tracks, &set, &array, &cfg, Some(-20.0), 6).unwrap();
        assert_ne!(other.data, noisy.data);
    }

    #[test]
    fn empty_set_gives_noise_only() {
        let cfg = cfg();
        let array = AntennaArray::single_element();
        let set = centers(&[]);
        let tracks = RangeTrackSet::constant(&set, &array, SlowTimeGrid::new(0.0, 100.0, 50)).unwrap();
        let cube = synthesize_if(&tracks, &set, &array, &cfg, Some(0.0), 1).unwrap();
        assert!((cube.mean_power() - 1.0).abs() < 0.1);
        let silent = synthesize_if(&tracks, &set, &array, &cfg, None, 1).unwrap();
        assert_eq!(silent.mean_power(), 0.0);
    }

    #[test]
    fn mismatched_tracks_rejected() {
        let cfg = cfg();
        let array = AntennaArray::single_element();
        let set = centers(&[Vec3::new(1.0, 0.0, 0.0)]);
        let tracks = RangeTrackSet::constant(&set, &array, SlowTimeGrid::new(0.0, 100.0, 5)).unwrap();
        let two = centers(&[Vec3::new(1.0, 0.0, 0.0), Vec3::new(2.0, 0.0, 0.0)]);
        assert!(synthesize_if(&tracks, &two, &array, &cfg, None, 0).is_err());
    }
}
