use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::Vec3;

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
/// Vacuum permeability, H/m.
pub const MU_0: f64 = 1.256_637_062_12e-6;

/// FMCW chirp and sampling parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RadarConfig {
    /// Chirp center frequency fc, Hz.
    pub center_frequency: f64,
    /// Sweep bandwidth B, Hz.
    pub bandwidth: f64,
    /// Sweep duration Tc, seconds.
    pub chirp_duration: f64,
    /// Chirp (slow-time) rate, Hz.
    pub slow_rate: f64,
    /// ADC samples per chirp.
    pub fast_samples: usize,
    pub speed_of_light: f64,
    /// Permeability μ of the propagation medium, H/m.
    pub permeability: f64,
}

impl Default for RadarConfig {
    fn default() -> Self {
        Self {
            center_frequency: 79e9,
            bandwidth: 3.354e9,
            chirp_duration: 100e-6,
            slow_rate: 100.0,
            fast_samples: 256,
            speed_of_light: SPEED_OF_LIGHT,
            permeability: MU_0,
        }
    }
}

impl RadarConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("center_frequency", self.center_frequency),
            ("bandwidth", self.bandwidth),
            ("chirp_duration", self.chirp_duration),
            ("slow_rate", self.slow_rate),
            ("speed_of_light", self.speed_of_light),
            ("permeability", self.permeability),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Validation(format!("radar {name} must be positive, got {v}")));
            }
        }
        if self.fast_samples < 2 {
            return Err(Error::Validation("radar fast_samples must be at least 2".into()));
        }
        if self.bandwidth >= 2.0 * self.center_frequency {
            return Err(Error::Validation("bandwidth exceeds twice the center frequency".into()));
        }
        Ok(())
    }

    /// Chirp start frequency f0 = fc − B/2.
    pub fn start_frequency(&self) -> f64 {
        self.center_frequency - 0.5 * self.bandwidth
    }

    /// γ = B / Tc.
    pub fn chirp_rate(&self) -> f64 {
        self.bandwidth / self.chirp_duration
    }

    pub fn wavelength(&self) -> f64 {
        self.speed_of_light / self.center_frequency
    }

    pub fn wavenumber(&self) -> f64 {
        2.0 * PI / self.wavelength()
    }

    pub fn angular_frequency(&self) -> f64 {
        2.0 * PI * self.center_frequency
    }

    /// Wave impedance Z = μ c.
    pub fn impedance(&self) -> f64 {
        self.permeability * self.speed_of_light
    }

    /// c / (2B): range spanned by one unpadded range bin.
    pub fn range_resolution(&self) -> f64 {
        self.speed_of_light / (2.0 * self.bandwidth)
    }

    pub fn fast_time_step(&self) -> f64 {
        self.chirp_duration / self.fast_samples as f64
    }

    /// Beat frequency 2γR/c of a target at `range`.
    pub fn beat_frequency(&self, range: f64) -> f64 {
        2.0 * self.chirp_rate() * range / self.speed_of_light
    }

    /// Largest range whose beat frequency stays below the complex sample rate.
    pub fn max_range(&self) -> f64 {
        self.fast_samples as f64 * self.range_resolution()
    }
}

/// Half-power half-beamwidths of an element, degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Beamwidth {
    pub azimuth_deg: f64,
    pub elevation_deg: f64,
}

impl Beamwidth {
    pub const fn new(azimuth_deg: f64, elevation_deg: f64) -> Self {
        Self {
            azimuth_deg,
            elevation_deg,
        }
    }

    /// Amplitude pattern at (azimuth, elevation) in radians.
    ///
    /// Separable raised cosine per axis, equal to 1/√2 (−3 dB in power) at
    /// the half-beamwidth and forced to zero beyond its first null or ±90°.
    pub fn gain(&self, azimuth: f64, elevation: f64) -> f64 {
        raised_cosine(azimuth, self.azimuth_deg.to_radians())
            * raised_cosine(elevation, self.elevation_deg.to_radians())
    }
}

fn raised_cosine(angle: f64, half_beamwidth: f64) -> f64 {
    // ½(1 + cos x) = 1/√2  ⇔  x = acos(√2 − 1)
    let null = PI * half_beamwidth / (std::f64::consts::SQRT_2 - 1.0).acos();
    let limit = null.min(0.5 * PI);
    if angle.abs() >= limit {
        0.0
    } else {
        0.5 * (1.0 + (PI * angle / null).cos())
    }
}

/// Azimuth and elevation (radians) of `point` seen from `origin`, boresight +x.
pub fn direction_angles(origin: &Vec3, point: &Vec3) -> (f64, f64) {
    let d = point - origin;
    let az = d.y.atan2(d.x);
    let el = d.z.atan2(d.x.hypot(d.y));
    (az, el)
}

/// Unit vector for azimuth θ and elevation φ.
pub fn steering_direction(azimuth: f64, elevation: f64) -> Vec3 {
    Vec3::new(
        elevation.cos() * azimuth.cos(),
        elevation.cos() * azimuth.sin(),
        elevation.sin(),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArrayLayout {
    /// Virtual elements along one horizontal line (azimuth only).
    Linear,
    /// Virtual elements spread in azimuth and elevation.
    Planar,
}

/// MIMO antenna geometry in radar coordinates.
///
/// Virtual elements are the Tx/Rx midpoints, enumerated Tx-major, so
/// `‖p_m − q‖` is the one-way range of the equivalent monostatic element.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AntennaArray {
    pub tx_positions: Vec<Vec3>,
    pub rx_positions: Vec<Vec3>,
    pub tx_beamwidth: Beamwidth,
    pub rx_beamwidth: Beamwidth,
    pub layout: ArrayLayout,
}

impl AntennaArray {
    /// Builds an array and shifts it so the virtual centroid sits at the origin.
    pub fn centered(
        tx_positions: Vec<Vec3>,
        rx_positions: Vec<Vec3>,
        tx_beamwidth: Beamwidth,
        rx_beamwidth: Beamwidth,
        layout: ArrayLayout,
    ) -> Result<Self> {
        let mut array = Self {
            tx_positions,
            rx_positions,
            tx_beamwidth,
            rx_beamwidth,
            layout,
        };
        array.validate()?;
        let c = array.centroid();
        array.tx_positions.iter_mut().for_each(|p| *p -= c);
        array.rx_positions.iter_mut().for_each(|p| *p -= c);
        Ok(array)
    }

    pub fn validate(&self) -> Result<()> {
        if self.tx_positions.is_empty() || self.rx_positions.is_empty() {
            return Err(Error::Validation(
                "antenna array needs at least one Tx and one Rx".into(),
            ));
        }
        Ok(())
    }

    /// Linear 3 Tx × 4 Rx array: Tx pitch 7.6 mm, Rx pitch 1.9 mm.
    pub fn linear_3x4() -> Self {
        let tx = (0..3).map(|i| Vec3::new(0.0, 7.6e-3 * i as f64, 0.0)).collect();
        let rx = (0..4).map(|i| Vec3::new(0.0, 1.9e-3 * i as f64, 0.0)).collect();
        Self::centered(
            tx,
            rx,
            Beamwidth::new(35.0, 4.0),
            Beamwidth::new(45.0, 4.0),
            ArrayLayout::Linear,
        )
        .expect("static layout")
    }

    /// Planar 3 Tx × 4 Rx array: Tx stacked vertically, Rx horizontally, 1.9 mm pitch.
    pub fn planar_3x4() -> Self {
        let tx = (0..3).map(|i| Vec3::new(0.0, 0.0, 1.9e-3 * i as f64)).collect();
        let rx = (0..4).map(|i| Vec3::new(0.0, 1.9e-3 * i as f64, 0.0)).collect();
        Self::centered(
            tx,
            rx,
            Beamwidth::new(33.0, 45.0),
            Beamwidth::new(45.0, 45.0),
            ArrayLayout::Planar,
        )
        .expect("static layout")
    }

    /// One co-located Tx/Rx pair with broad patterns.
    pub fn single_element() -> Self {
        Self {
            tx_positions: vec![Vec3::zeros()],
            rx_positions: vec![Vec3::zeros()],
            tx_beamwidth: Beamwidth::new(60.0, 60.0),
            rx_beamwidth: Beamwidth::new(60.0, 60.0),
            layout: ArrayLayout::Linear,
        }
    }

    pub fn num_virtual(&self) -> usize {
        self.tx_positions.len() * self.rx_positions.len()
    }

    pub fn virtual_positions(&self) -> Vec<Vec3> {
        self.tx_positions
            .iter()
            .flat_map(|t| self.rx_positions.iter().map(move |r| 0.5 * (t + r)))
            .collect()
    }

    /// p̄, mean of the virtual positions.
    pub fn centroid(&self) -> Vec3 {
        let v = self.virtual_positions();
        v.iter().sum::<Vec3>() / v.len() as f64
    }

    pub fn tx_gain(&self, point: &Vec3) -> f64 {
        let (az, el) = direction_angles(&self.centroid(), point);
        self.tx_beamwidth.gain(az, el)
    }

    pub fn rx_gain(&self, point: &Vec3) -> f64 {
        let (az, el) = direction_angles(&self.centroid(), point);
        self.rx_beamwidth.gain(az, el)
    }

    /// Approximate two-way null-to-null half width of the azimuth beam, degrees.
    pub fn azimuth_beamwidth_deg(&self, wavelength: f64) -> f64 {
        let ys: Vec<f64> = self.virtual_positions().iter().map(|p| p.y).collect();
        let span =
            ys.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - ys.iter().cloned().fold(f64::INFINITY, f64::min);
        if span <= 0.0 {
            return 180.0;
        }
        // two-way phase: effective aperture is twice the midpoint span
        let n = ys.len() as f64;
        let aperture = 2.0 * span * n / (n - 1.0);
        (wavelength / aperture).min(1.0).asin().to_degrees()
    }
}
