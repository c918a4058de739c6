use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{ExtrinsicTransform, Intrinsics, DEFAULT_DEPTH_RATE_HZ};
use crate::scene::shapes::Shape;
use crate::series::TimeSeries;
use crate::Vec3;

/// Largest physiological breathing excursion accepted, meters.
pub const MAX_BREATHING_AMPLITUDE: f64 = 0.02;
/// Accepted breathing frequency band, Hz.
pub const BREATHING_FREQUENCY_RANGE: (f64, f64) = (0.05, 0.5);

/// Time course of a part's breathing displacement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Waveform {
    Sinusoid {
        amplitude: f64,
        frequency: f64,
        #[serde(default)]
        phase: f64,
    },
    /// Displacement samples in meters, linearly interpolated. Samples are
    /// given inline or loaded from a two-column CSV (`time_s`, displacement).
    Trace {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        path: Option<PathBuf>,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        times: Vec<f64>,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        values: Vec<f64>,
    },
}

impl Waveform {
    pub fn sinusoid(amplitude: f64, frequency: f64, phase: f64) -> Self {
        Waveform::Sinusoid {
            amplitude,
            frequency,
            phase,
        }
    }

    /// Loads a CSV trace into inline samples; relative paths resolve against `base`.
    pub fn resolve(&mut self, base: &Path) -> Result<()> {
        if let Waveform::Trace {
            path: Some(p),
            times,
            values,
        } = self
        {
            let full = if p.is_relative() { base.join(&p) } else { p.clone() };
            let file = std::fs::File::open(&full).map_err(|e| Error::io(&full, e))?;
            let mut reader = csv::Reader::from_reader(file);
            times.clear();
            values.clear();
            for rec in reader.records() {
                let rec = rec?;
                let num = |i: usize| -> Result<f64> {
                    rec.get(i)
                        .and_then(|s| s.trim().parse().ok())
                        .ok_or_else(|| Error::Format(format!("{}: malformed trace row", full.display())))
                };
                times.push(num(0)?);
                values.push(num(1)?);
            }
            *self = Waveform::Trace {
                path: None,
                times: std::mem::take(times),
                values: std::mem::take(values),
            };
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Waveform::Sinusoid {
                amplitude, frequency, ..
            } => {
                if !(amplitude.abs() < MAX_BREATHING_AMPLITUDE) {
                    return Err(Error::Validation(format!(
                        "breathing amplitude {amplitude} m must be below {MAX_BREATHING_AMPLITUDE} m"
                    )));
                }
                let (lo, hi) = BREATHING_FREQUENCY_RANGE;
                if !(*frequency >= lo && *frequency <= hi) {
                    return Err(Error::Validation(format!(
                        "breathing frequency {frequency} Hz outside [{lo}, {hi}] Hz"
                    )));
                }
            }
            Waveform::Trace { path, times, values } => {
                if path.is_some() {
                    return Err(Error::Validation("trace file has not been loaded".into()));
                }
                if times.len() != values.len() || times.len() < 2 {
                    return Err(Error::Validation(
                        "trace needs at least two (time, value) samples".into(),
                    ));
                }
                if times.windows(2).any(|w| !(w[1] > w[0])) {
                    return Err(Error::Validation("trace times must be strictly increasing".into()));
                }
                if values.iter().any(|v| !(v.abs() < MAX_BREATHING_AMPLITUDE)) {
                    return Err(Error::Validation(format!(
                        "trace displacement must stay below {MAX_BREATHING_AMPLITUDE} m"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Displacement at time `t`, meters. Traces hold their end values outside their span.
    pub fn value(&self, t: f64) -> f64 {
        match self {
            Waveform::Sinusoid {
                amplitude,
                frequency,
                phase,
            } => amplitude * (2.0 * PI * frequency * t + phase).sin(),
            Waveform::Trace { times, values, .. } => {
                if times.is_empty() {
                    return 0.0;
                }
                if t <= times[0] {
                    return values[0];
                }
                let last = times.len() - 1;
                if t >= times[last] {
                    return values[last];
                }
                let j = times.partition_point(|x| *x <= t) - 1;
                let f = (t - times[j]) / (times[j + 1] - times[j]);
                values[j] * (1.0 - f) + values[j + 1] * f
            }
        }
    }

    /// Dominant frequency, if the waveform is a sinusoid.
    pub fn frequency(&self) -> Option<f64> {
        match self {
            Waveform::Sinusoid { frequency, .. } => Some(*frequency),
            Waveform::Trace { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Breathing {
    pub waveform: Waveform,
    /// Gaussian σ of the displacement taper around the part's radar-facing
    /// point, meters; absent means uniform displacement.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub taper_sigma: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartConfig {
    pub name: String,
    pub shape: Shape,
    /// Center in radar coordinates, meters.
    pub center: [f64; 3],
    #[serde(default)]
    pub yaw_deg: f64,
    #[serde(default)]
    pub pitch_deg: f64,
    #[serde(default)]
    pub roll_deg: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub breathing: Option<Breathing>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CameraConfig {
    pub width: usize,
    pub height: usize,
    pub intrinsics: Intrinsics,
    #[serde(default)]
    pub extrinsics: ExtrinsicTransform,
    #[serde(default = "default_rate")]
    pub rate: f64,
    pub duration: f64,
}

fn default_rate() -> f64 {
    DEFAULT_DEPTH_RATE_HZ
}

impl CameraConfig {
    /// Centered principal point, square pixels, co-located with the radar.
    pub fn simple(width: usize, height: usize, focal: f64, duration: f64) -> Self {
        Self {
            width,
            height,
            intrinsics: Intrinsics {
                fx: focal,
                fy: focal,
                cx: 0.5 * (width as f64 - 1.0),
                cy: 0.5 * (height as f64 - 1.0),
            },
            extrinsics: ExtrinsicTransform::colocated(),
            rate: DEFAULT_DEPTH_RATE_HZ,
            duration,
        }
    }

    /// Number of frames: duration × rate, rounded.
    pub fn frame_count(&self) -> usize {
        (self.duration * self.rate).round() as usize
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneConfig {
    pub parts: Vec<PartConfig>,
    /// Rotation of the whole body about the vertical axis through `body_pivot`, degrees.
    #[serde(default)]
    pub body_yaw_deg: f64,
    /// Defaults to the mean of the part centers.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub body_pivot: Option<[f64; 3]>,
    pub camera: CameraConfig,
    /// Gaussian depth jitter before quantization, millimeters.
    #[serde(default)]
    pub depth_jitter_mm: f64,
    #[serde(default)]
    pub seed: u64,
}

impl SceneConfig {
    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg: SceneConfig =
            serde_json::from_str(&text).map_err(|e| Error::Validation(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        for part in &mut cfg.parts {
            if let Some(b) = &mut part.breathing {
                b.waveform.resolve(base)?;
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.parts.is_empty() {
            return Err(Error::Validation("scene has no body parts".into()));
        }
        for part in &self.parts {
            part.shape
                .validate()
                .map_err(|e| Error::Validation(format!("part {}: {e}", part.name)))?;
            if let Some(b) = &part.breathing {
                b.waveform
                    .validate()
                    .map_err(|e| Error::Validation(format!("part {}: {e}", part.name)))?;
                if let Some(s) = b.taper_sigma {
                    if !(s > 0.0) {
                        return Err(Error::Validation(format!(
                            "part {}: taper sigma must be positive",
                            part.name
                        )));
                    }
                }
            }
        }
        let cam = &self.camera;
        if cam.width == 0 || cam.height == 0 || cam.width > u16::MAX as usize || cam.height > u16::MAX as usize {
            return Err(Error::Validation(
                "camera size must be between 1 and 65535 pixels".into(),
            ));
        }
        cam.intrinsics.validate()?;
        if !(cam.rate > 0.0) || !(cam.duration > 0.0) {
            return Err(Error::Validation("camera rate and duration must be positive".into()));
        }
        if cam.frame_count() == 0 {
            return Err(Error::Validation("camera duration yields no frames".into()));
        }
        if !(self.depth_jitter_mm >= 0.0) {
            return Err(Error::Validation("depth jitter must be non-negative".into()));
        }
        Ok(())
    }

    /// Seated torso facing the radar with both arms alongside.
    ///
    /// The torso front is 1.0 m from the radar on boresight; the arms sit at
    /// ±25° bearing. The torso breathes at `frequency` with `amplitude`.
    pub fn seated_torso(amplitude: f64, frequency: f64, duration: f64) -> Self {
        let torso = PartConfig {
            name: "torso".into(),
            shape: Shape::Ellipsoid {
                semi_axes: [0.15, 0.25, 0.35],
            },
            center: [1.15, 0.0, 0.0],
            yaw_deg: 0.0,
            pitch_deg: 0.0,
            roll_deg: 0.0,
            breathing: Some(Breathing {
                waveform: Waveform::sinusoid(amplitude, frequency, 0.0),
                taper_sigma: Some(0.15),
            }),
        };
        let arm = |sign: f64, name: &str| {
            let bearing = (sign * 25.0f64).to_radians();
            PartConfig {
                name: name.into(),
                shape: Shape::Cylinder {
                    radius: 0.045,
                    half_length: 0.28,
                },
                center: [1.1 * bearing.cos(), 1.1 * bearing.sin(), -0.05],
                yaw_deg: 0.0,
                pitch_deg: 0.0,
                roll_deg: 0.0,
                breathing: None,
            }
        };
        Self {
            parts: vec![torso, arm(1.0, "left_arm"), arm(-1.0, "right_arm")],
            body_yaw_deg: 0.0,
            body_pivot: None,
            camera: CameraConfig::simple(320, 160, 256.0, duration),
            depth_jitter_mm: 0.0,
            seed: 0,
        }
    }

    /// Square plate facing the radar at `range`, breathing as a whole.
    pub fn breathing_plate(range: f64, side: f64, waveform: Waveform, duration: f64) -> Self {
        Self {
            parts: vec![PartConfig {
                name: "plate".into(),
                shape: Shape::Plate {
                    width: side,
                    height: side,
                    thickness: 0.01,
                },
                center: [range + 0.005, 0.0, 0.0],
                yaw_deg: 0.0,
                pitch_deg: 0.0,
                roll_deg: 0.0,
                breathing: Some(Breathing {
                    waveform,
                    taper_sigma: None,
                }),
            }],
            body_yaw_deg: 0.0,
            body_pivot: None,
            camera: CameraConfig::simple(96, 96, 256.0, duration),
            depth_jitter_mm: 0.0,
            seed: 0,
        }
    }

    pub fn pivot(&self) -> Vec3 {
        match self.body_pivot {
            Some(p) => Vec3::from(p),
            None => self.parts.iter().map(|p| Vec3::from(p.center)).sum::<Vec3>() / self.parts.len() as f64,
        }
    }
}

/// Samples `waveform` on a uniform grid.
pub fn sample_waveform(waveform: &Waveform, start: f64, rate: f64, samples: usize) -> TimeSeries {
    TimeSeries::new(
        start,
        rate,
        (0..samples).map(|i| waveform.value(start + i as f64 / rate)).collect(),
    )
}
