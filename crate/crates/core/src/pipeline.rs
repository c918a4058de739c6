//! End-to-end stages shared by the command line tool and the examples.

use std::fs::File;
use std::io::{BufWriter, Read};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dsp::{
    beamform, extract_displacement, highpass, range_compress_window, spectrogram, AngleGrid, DisplacementTrace,
    RadarImage, SpectrogramData, SpectrogramOptions,
};
use crate::em_scatter::radar::direction_angles;
use crate::em_scatter::{
    cluster_centers, extract_centers, scatter_power_map, AntennaArray, RadarConfig, ScatterPowerMap,
    ScatteringCenterSet, DEFAULT_A0_WAVELENGTHS, DEFAULT_THRESHOLD_DB,
};
use crate::error::{Error, Result, StageContext};
use crate::fmcw_sim::{
    fit_baseline_phase, synthesize_baseline, synthesize_if, track_ranges, BaselineModel, IFCube, RangeTrackSet,
    TrackingOptions, DEFAULT_BASELINE_AMPLITUDE, DEFAULT_PHASE_STEPS, DEFAULT_SNR_DB,
};
use crate::geometry::{
    depth_to_mesh, time_average_depth, DepthSequence, ExtrinsicTransform, SurfaceMesh, DEFAULT_DISCONTINUITY_MM,
    DEFAULT_MIN_VALID_FRACTION,
};
use crate::metrics::{
    displacement_metrics, image_correlation, reference_cross_correlation, respiration_rate_default,
    spectrogram_correlation, DisplacementScores, EvaluationRegion, MetricsReport, ReferenceScores, ShiftGrid,
};
use crate::series::TimeSeries;
use crate::Vec3;

/// Settings read from `radar.json`. Every field has a default, so `{}` is a
/// complete configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimulationConfig {
    pub radar: RadarConfig,
    pub array: AntennaArray,
    pub scatter: ScatterOptions,
    pub tracking: TrackOptions,
    /// `None` disables noise.
    pub snr_db: Option<f64>,
    pub baseline: BaselineOptions,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            radar: RadarConfig::default(),
            array: AntennaArray::linear_3x4(),
            scatter: ScatterOptions::default(),
            tracking: TrackOptions::default(),
            snr_db: Some(DEFAULT_SNR_DB),
            baseline: BaselineOptions::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScatterOptions {
    /// Kernel radius in wavelengths.
    pub a0_wavelengths: f64,
    pub threshold_db: f64,
    /// Local-maximum neighborhood; `None` uses the kernel radius.
    pub neighborhood_radius: Option<f64>,
    pub discontinuity_mm: f64,
    pub min_valid_fraction: f64,
}

impl Default for ScatterOptions {
    fn default() -> Self {
        Self {
            a0_wavelengths: DEFAULT_A0_WAVELENGTHS,
            threshold_db: DEFAULT_THRESHOLD_DB,
            neighborhood_radius: None,
            discontinuity_mm: DEFAULT_DISCONTINUITY_MM,
            min_valid_fraction: DEFAULT_MIN_VALID_FRACTION,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrackOptions {
    pub patch_radius: f64,
    pub max_miss_fraction: f64,
}

impl Default for TrackOptions {
    fn default() -> Self {
        Self {
            patch_radius: 0.02,
            max_miss_fraction: 0.1,
        }
    }
}

/// Torso selection for the baseline: centers within `radius` of `center`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TorsoRegion {
    pub center: [f64; 3],
    pub radius: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BaselineOptions {
    pub amplitude: f64,
    /// Fixed respiration rate; otherwise estimated from the reference or the proposed cube.
    pub frequency: Option<f64>,
    /// Fixed phase; otherwise fitted.
    pub phase: Option<f64>,
    /// Without a region the cluster closest to boresight is used.
    pub torso: Option<TorsoRegion>,
    /// Link distance used to group centers when no region is given, meters.
    pub cluster_link: f64,
}

impl Default for BaselineOptions {
    fn default() -> Self {
        Self {
            amplitude: DEFAULT_BASELINE_AMPLITUDE,
            frequency: None,
            phase: None,
            torso: None,
            cluster_link: 0.15,
        }
    }
}

impl SimulationConfig {
    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg: Self = serde_json::from_str(&text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.radar.validate()?;
        self.array.validate()?;
        let s = &self.scatter;
        if !(s.a0_wavelengths > 0.0) {
            return Err(Error::Validation("a0_wavelengths must be positive".into()));
        }
        if !(s.min_valid_fraction > 0.0 && s.min_valid_fraction <= 1.0) {
            return Err(Error::Validation("min_valid_fraction must lie in (0, 1]".into()));
        }
        if !(self.tracking.patch_radius > 0.0) {
            return Err(Error::Validation("patch_radius must be positive".into()));
        }
        if let Some(snr) = self.snr_db {
            if !snr.is_finite() {
                return Err(Error::Validation("snr_db must be finite".into()));
            }
        }
        Ok(())
    }

    pub fn a0(&self) -> f64 {
        self.scatter.a0_wavelengths * self.radar.wavelength()
    }
}

/// Intermediate products of the proposed simulation.
#[derive(Debug, Clone)]
pub struct Simulation {
    pub mesh: SurfaceMesh,
    pub power_map: ScatterPowerMap,
    /// All extracted centers.
    pub centers: ScatteringCenterSet,
    /// Centers that survived tracking, in track order.
    pub tracked: ScatteringCenterSet,
    pub tracks: RangeTrackSet,
    pub cube: IFCube,
}

/// Depth sequence to IF cube: time-averaged mesh, PO power map, centers,
/// per-frame range tracking and IF synthesis.
pub fn simulate(
    seq: &DepthSequence,
    extrinsics: &ExtrinsicTransform,
    cfg: &SimulationConfig,
    seed: u64,
) -> Result<Simulation> {
    cfg.validate().stage("config")?;
    let avg = time_average_depth(seq, cfg.scatter.min_valid_fraction);
    let mesh = depth_to_mesh(&avg, extrinsics, cfg.scatter.discontinuity_mm).stage("mesh")?;
    log::info!("mesh: {} vertices, {} facets", mesh.vertex_count(), mesh.facet_count());
    let a0 = cfg.a0();
    let power_map = scatter_power_map(&mesh, &cfg.array, &cfg.radar, a0).stage("scattering")?;
    let centers = extract_centers(
        &power_map,
        cfg.scatter.threshold_db,
        cfg.scatter.neighborhood_radius.unwrap_or(a0),
    );
    if centers.is_empty() {
        return Err(Error::Domain("no scattering center above threshold".into())).stage("centers");
    }
    log::info!("{} scattering centers", centers.len());
    let opts = TrackingOptions {
        patch_radius: cfg.tracking.patch_radius,
        max_miss_fraction: cfg.tracking.max_miss_fraction,
        slow_rate: cfg.radar.slow_rate,
    };
    let tracks = track_ranges(&centers, seq, extrinsics, &cfg.array, &opts).stage("tracking")?;
    let tracked = tracks.tracked_centers(&centers);
    if tracked.is_empty() {
        return Err(Error::Domain("every center was lost while tracking".into())).stage("tracking");
    }
    let cube = synthesize_if(&tracks, &tracked, &cfg.array, &cfg.radar, cfg.snr_db, seed).stage("synthesis")?;
    Ok(Simulation {
        mesh,
        power_map,
        centers,
        tracked,
        tracks,
        cube,
    })
}

/// Centers used by the baseline model.
pub fn torso_centers(centers: &ScatteringCenterSet, opts: &BaselineOptions) -> ScatteringCenterSet {
    if let Some(region) = opts.torso {
        return centers.select_within(&Vec3::from(region.center), region.radius);
    }
    let groups = cluster_centers(centers, opts.cluster_link);
    let off_axis = |g: &Vec<usize>| {
        let mean = g.iter().map(|&i| centers.centers[i].position).sum::<Vec3>() / g.len() as f64;
        let (az, el) = direction_angles(&Vec3::zeros(), &mean);
        az.hypot(el)
    };
    match groups.iter().min_by(|a, b| off_axis(a).total_cmp(&off_axis(b))) {
        Some(g) => centers.retain_indices(g),
        None => centers.clone(),
    }
}

/// Sinusoidal baseline on the slow-time grid of `proposed`.
///
/// Frequency and phase come from the options when set, otherwise from
/// `reference` (a line-of-sight displacement), otherwise from the
/// displacement extracted from `proposed`.
pub fn simulate_baseline(
    centers: &ScatteringCenterSet,
    proposed: &IFCube,
    cfg: &SimulationConfig,
    reference: Option<&TimeSeries>,
    seed: u64,
) -> Result<(BaselineModel, IFCube)> {
    let torso = torso_centers(centers, &cfg.baseline);
    if torso.is_empty() {
        return Err(Error::Validation("torso region holds no scattering center".into())).stage("baseline");
    }
    let needs_signal = cfg.baseline.frequency.is_none() || cfg.baseline.phase.is_none();
    let signal = match (needs_signal, reference) {
        (false, _) => None,
        (true, Some(r)) => Some(r.clone()),
        (true, None) => {
            let image = radar_image(proposed, None).stage("baseline")?;
            Some(
                extract_displacement(&image, cfg.radar.wavelength())
                    .stage("baseline")?
                    .d_hf,
            )
        }
    };
    let frequency = match cfg.baseline.frequency {
        Some(f) => f,
        None => {
            respiration_rate_default(signal.as_ref().expect("signal present"))
                .stage("baseline")?
                .frequency
        }
    };
    let mut model = BaselineModel::new(frequency, torso);
    model.amplitude = cfg.baseline.amplitude;
    model.phase = match cfg.baseline.phase {
        Some(p) => p,
        None => fit_baseline_phase(&model, signal.as_ref().expect("signal present"), DEFAULT_PHASE_STEPS)
            .stage("baseline")?,
    };
    log::info!(
        "baseline: {} centers, {:.4} Hz, phase {:.3} rad",
        model.centers.len(),
        model.frequency,
        model.phase
    );
    let cube =
        synthesize_baseline(&model, &cfg.array, &cfg.radar, proposed.slow, cfg.snr_db, seed).stage("baseline")?;
    Ok((model, cube))
}

/// Radar image over the region's range window, or over all ranges.
pub fn radar_image(cube: &IFCube, region: Option<&EvaluationRegion>) -> Result<RadarImage> {
    let (lo, hi) = match region {
        Some(r) => r.range_window(),
        None => (0.0, cube.radar.max_range()),
    };
    let profiles = range_compress_window(cube, lo, hi)?;
    beamform(profiles, &cube.array, &cube.radar, &AngleGrid::default_for(&cube.array))
}

/// Products of one cube inside an evaluation.
#[derive(Debug, Clone)]
pub struct CubeProducts {
    pub image: RadarImage,
    pub displacement: DisplacementTrace,
    pub spectrogram: SpectrogramData,
}

pub fn process_cube(cube: &IFCube, region: &EvaluationRegion) -> Result<CubeProducts> {
    let image = radar_image(cube, Some(region)).stage("imaging")?;
    let displacement = extract_displacement(&image, cube.radar.wavelength()).stage("displacement")?;
    let spectrogram = spectrogram(cube, &SpectrogramOptions::new(region.range_window())).stage("spectrogram")?;
    Ok(CubeProducts {
        image,
        displacement,
        spectrogram,
    })
}

#[derive(Debug, Clone, Default)]
pub struct EvaluationInputs {
    pub subject: String,
    pub condition: String,
    /// Reference respiration signal (for example a belt or the scene ground truth).
    pub reference: Option<TimeSeries>,
    pub max_lag_s: f64,
}

#[derive(Debug, Clone)]
pub struct Evaluation {
    pub report: MetricsReport,
    pub a: CubeProducts,
    pub b: CubeProducts,
}

/// Scores cube `b` against cube `a` over `region`.
pub fn evaluate(a: &IFCube, b: &IFCube, region: &EvaluationRegion, inputs: &EvaluationInputs) -> Result<Evaluation> {
    region.validate().stage("region")?;
    if a.radar != b.radar {
        return Err(Error::Validation(
            "cubes were simulated with different radar configurations".into(),
        ))
        .stage("evaluate");
    }
    if a.array != b.array {
        return Err(Error::Validation(
            "cubes were simulated with different antenna arrays".into(),
        ))
        .stage("evaluate");
    }
    let pa = process_cube(a, region)?;
    let pb = process_cube(b, region)?;
    let image = image_correlation(&pa.image, &pb.image, region, &ShiftGrid::default()).stage("image correlation")?;
    let displacement =
        displacement_metrics(&pa.displacement.d, &pb.displacement.d, false).stage("displacement metrics")?;
    let displacement_hf =
        displacement_metrics(&pa.displacement.d_hf, &pb.displacement.d_hf, false).stage("displacement metrics")?;
    let rho_s = spectrogram_correlation(&pa.spectrogram, &pb.spectrogram).stage("spectrogram metrics")?;
    let ra = respiration_rate_default(&pa.displacement.d_hf).stage("respiration rate")?;
    let rb = respiration_rate_default(&pb.displacement.d_hf).stage("respiration rate")?;
    let reference = match &inputs.reference {
        None => None,
        Some(h) => {
            let h = highpass(&at_rate(h, a.slow.rate).stage("reference")?);
            let max_lag = if inputs.max_lag_s > 0.0 { inputs.max_lag_s } else { 2.0 };
            Some(ReferenceScores {
                rho_t_a: reference_cross_correlation(&pa.displacement.d_hf, &h, max_lag).stage("reference")?,
                rho_t_b: reference_cross_correlation(&pb.displacement.d_hf, &h, max_lag).stage("reference")?,
                rate_hz: respiration_rate_default(&h).stage("reference")?.frequency,
            })
        }
    };
    let report = MetricsReport {
        subject: inputs.subject.clone(),
        condition: inputs.condition.clone(),
        image,
        displacement,
        displacement_hf,
        rho_s,
        reference,
        rates_hz: (ra.frequency, rb.frequency),
        rate_low_confidence: (ra.low_confidence, rb.low_confidence),
    };
    Ok(Evaluation { report, a: pa, b: pb })
}

/// `series` linearly resampled to `rate` over its own span.
pub fn at_rate(series: &TimeSeries, rate: f64) -> Result<TimeSeries> {
    if series.rate == rate {
        return Ok(series.clone());
    }
    TimeSeries::from_samples(&series.times(), &series.values, rate)
}

/// High-passed displacement of `trace` scored against the high-passed
/// truth over the span both cover.
pub fn truth_scores(trace: &DisplacementTrace, truth: &TimeSeries) -> Result<DisplacementScores> {
    let d = &trace.d;
    let first = (0..d.len()).find(|&i| truth.value_at(d.time(i)).is_some());
    let Some(first) = first else {
        return Err(Error::Domain("truth does not overlap the displacement trace".into()));
    };
    let mut d_part = Vec::new();
    let mut t_part = Vec::new();
    for i in first..d.len() {
        match truth.value_at(d.time(i)) {
            Some(v) => {
                d_part.push(d.values[i]);
                t_part.push(v);
            }
            None => break,
        }
    }
    let start = d.time(first);
    let d_hf = highpass(&TimeSeries::new(start, d.rate, d_part));
    let truth_hf = highpass(&TimeSeries::new(start, d.rate, t_part));
    displacement_metrics(&d_hf, &truth_hf, true)
}

/// SHA-256 of a file as lowercase hex.
pub fn sha256_file(path: &Path) -> Result<String> {
    let mut f = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut hasher = Sha256::new();
    let mut buf = vec![0u8; 1 << 16];
    loop {
        let n = f.read(&mut buf).map_err(|e| Error::io(path, e))?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(hex::encode(hasher.finalize()))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileHash {
    pub path: String,
    pub sha256: String,
}

impl FileHash {
    pub fn of(path: &Path) -> Result<Self> {
        Ok(Self {
            path: path.display().to_string(),
            sha256: sha256_file(path)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageRecord {
    pub stage: String,
    pub seed: Option<u64>,
    pub inputs: Vec<FileHash>,
    /// Paths relative to the output directory.
    pub outputs: Vec<FileHash>,
}

/// Record of every stage run into one output directory.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunManifest {
    pub version: String,
    pub stages: Vec<StageRecord>,
}

pub const MANIFEST_FILE: &str = "manifest.json";

impl RunManifest {
    /// Loads `out_dir/manifest.json`, or an empty manifest.
    pub fn load_or_default(out_dir: &Path) -> Result<Self> {
        let path = out_dir.join(MANIFEST_FILE);
        if !path.exists() {
            return Ok(Self {
                version: env!("CARGO_PKG_VERSION").into(),
                stages: Vec::new(),
            });
        }
        let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    /// Hashes the stage's files and replaces any earlier record of the same stage.
    pub fn record(
        &mut self,
        stage: &str,
        seed: Option<u64>,
        inputs: &[PathBuf],
        out_dir: &Path,
        outputs: &[PathBuf],
    ) -> Result<()> {
        let inputs = inputs.iter().map(|p| FileHash::of(p)).collect::<Result<Vec<_>>>()?;
        let outputs = outputs
            .iter()
            .map(|p| {
                let mut h = FileHash::of(p)?;
                if let Ok(rel) = p.strip_prefix(out_dir) {
                    h.path = rel.display().to_string();
                }
                Ok(h)
            })
            .collect::<Result<Vec<_>>>()?;
        self.stages.retain(|s| s.stage != stage);
        self.stages.push(StageRecord {
            stage: stage.into(),
            seed,
            inputs,
            outputs,
        });
        Ok(())
    }

    pub fn write(&self, out_dir: &Path) -> Result<()> {
        let path = out_dir.join(MANIFEST_FILE);
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))
    }
}

/// Writes a center list as CSV (`index,x,y,z,power_db,vertex`).
pub fn write_centers_csv(centers: &ScatteringCenterSet, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(BufWriter::new(file));
    w.write_record(["index", "x", "y", "z", "power_db", "vertex"])?;
    let max = centers.centers.iter().map(|c| c.power).fold(0.0, f64::max);
    for (i, c) in centers.centers.iter().enumerate() {
        let db = if max > 0.0 && c.power > 0.0 {
            10.0 * (c.power / max).log10()
        } else {
            -200.0
        };
        w.write_record([
            i.to_string(),
            format!("{:.6}", c.position.x),
            format!("{:.6}", c.position.y),
            format!("{:.6}", c.position.z),
            format!("{db:.3}"),
            c.vertex.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// Reads the positions column block of a centers CSV.
pub fn read_center_positions(path: &Path) -> Result<Vec<Vec3>> {
    let mut r = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let num = |i: usize| -> Result<f64> {
            rec.get(i)
                .and_then(|s| s.trim().parse().ok())
                .ok_or_else(|| Error::Format(format!("{}: malformed center row", path.display())))
        };
        out.push(Vec3::new(num(1)?, num(2)?, num(3)?));
    }
    Ok(out)
}
