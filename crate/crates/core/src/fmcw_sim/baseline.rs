use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::em_scatter::{AntennaArray, RadarConfig, ScatteringCenterSet};
use crate::error::{Error, Result};
use crate::fmcw_sim::synth::{synthesize_if, IFCube};
use crate::fmcw_sim::tracking::{RangeTrackSet, SlowTimeGrid};
use crate::series::TimeSeries;

/// Default sinusoidal displacement amplitude, meters.
pub const DEFAULT_BASELINE_AMPLITUDE: f64 = 0.005;
/// Number of phase candidates tried when fitting the baseline phase.
pub const DEFAULT_PHASE_STEPS: usize = 128;
pub const RESPIRATION_BAND_HZ: (f64, f64) = (0.15, 0.4);

/// Conventional model: every torso center moves as A sin(2πft + φ) along its line of sight.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineModel {
    pub amplitude: f64,
    pub frequency: f64,
    pub phase: f64,
    pub centers: ScatteringCenterSet,
}

impl BaselineModel {
    pub fn new(frequency: f64, centers: ScatteringCenterSet) -> Self {
        Self {
            amplitude: DEFAULT_BASELINE_AMPLITUDE,
            frequency,
            phase: 0.0,
            centers,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.amplitude >= 0.0 && self.amplitude.is_finite()) {
            return Err(Error::Validation("baseline amplitude must be non-negative".into()));
        }
        if !(self.frequency > 0.0 && self.frequency.is_finite()) {
            return Err(Error::Validation("baseline frequency must be positive".into()));
        }
        let (lo, hi) = RESPIRATION_BAND_HZ;
        if self.frequency < lo || self.frequency > hi {
            log::warn!(
                "baseline frequency {:.3} Hz lies outside the respiration band [{lo}, {hi}] Hz",
                self.frequency
            );
        }
        Ok(())
    }

    pub fn displacement(&self, t: f64) -> f64 {
        self.amplitude * (2.0 * PI * self.frequency * t + self.phase).sin()
    }

    pub fn tracks(&self, array: &AntennaArray, grid: SlowTimeGrid) -> Result<RangeTrackSet> {
        RangeTrackSet::from_motion(&self.centers, array, grid, |_, t| self.displacement(t))
    }
}

/// IF cube of the sinusoidal baseline on `grid`.
pub fn synthesize_baseline(
    model: &BaselineModel,
    array: &AntennaArray,
    cfg: &RadarConfig,
    grid: SlowTimeGrid,
    snr_db: Option<f64>,
    seed: u64,
) -> Result<IFCube> {
    model.validate()?;
    if model.centers.is_empty() {
        return Err(Error::Validation(
            "baseline model needs at least one torso center".into(),
        ));
    }
    let tracks = model.tracks(array, grid)?;
    synthesize_if(&tracks, &model.centers, array, cfg, snr_db, seed)
}

/// Phase maximizing the Pearson correlation between the model sinusoid and `reference`.
pub fn fit_baseline_phase(model: &BaselineModel, reference: &TimeSeries, steps: usize) -> Result<f64> {
    if reference.duration() * model.frequency < 1.0 {
        return Err(Error::Domain(format!(
            "reference spans {:.2} s, shorter than one {:.3} Hz period",
            reference.duration(),
            model.frequency
        )));
    }
    let steps = steps.max(1);
    let times = reference.times();
    let mut best = (f64::NEG_INFINITY, 0.0);
    for k in 0..steps {
        let phi = 2.0 * PI * k as f64 / steps as f64;
        let model_wave: Vec<f64> = times
            .iter()
            .map(|t| (2.0 * PI * model.frequency * t + phi).sin())
            .collect();
        let r = crate::metrics::pearson(&model_wave, &reference.values)?;
        if r > best.0 {
            best = (r, phi);
        }
    }
    Ok(best.1)
}
