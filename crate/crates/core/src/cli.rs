//! Command line front end: `synth`, `simulate`, `evaluate` and `report`.

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::error::{Error, Result, StageContext};
use crate::fmcw_sim::{read_ifcb, write_ifcb, IFCube};
use crate::geometry::io::{read_sidecar, sidecar_path, write_dseq, write_frame_images};
use crate::geometry::{load_depth_sequence, DepthFormat, DepthSequence, ExtrinsicTransform};
use crate::metrics::{write_summary_csv, EvaluationRegion, MetricsReport};
use crate::pipeline::{
    evaluate, radar_image, simulate, simulate_baseline, write_centers_csv, EvaluationInputs, RunManifest,
    SimulationConfig,
};
use crate::plot::{plot_displacement, plot_radar_image, plot_spectrogram, PlotFormat};
use crate::scene::{build_scene, render_sequence, GroundTruth, SceneConfig};
use crate::series::TimeSeries;

#[derive(Debug, Parser)]
#[command(name = "rpsim", version, about = "FMCW radar respiration simulator")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct GlobalArgs {
    /// Seed for depth jitter and radar noise (overrides the scene file's seed).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Plot format: none, png or svg.
    #[arg(long, global = true, default_value = "none", value_parser = parse_plot_format)]
    pub plots: PlotFormat,
}

fn parse_plot_format(s: &str) -> std::result::Result<PlotFormat, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Render a scene description to a depth recording and its ground truth.
    Synth {
        scene: PathBuf,
        /// Also write the recording as per-frame PNG images.
        #[arg(long)]
        frame_images: bool,
    },
    /// Simulate the radar IF cube for a depth recording.
    Simulate {
        /// DSEQ file, or a directory of frame images.
        depth: PathBuf,
        /// Radar and processing settings; defaults are used when omitted.
        radar: Option<PathBuf>,
        /// Also synthesize the sinusoidal baseline.
        #[arg(long)]
        baseline: bool,
        #[command(flatten)]
        reference: ReferenceArgs,
    },
    /// Compare two IF cubes and write a metrics report.
    Evaluate {
        cube_a: PathBuf,
        cube_b: PathBuf,
        /// Evaluation region; centered on the strongest echo of `cube_a` when omitted.
        region: Option<PathBuf>,
        #[command(flatten)]
        reference: ReferenceArgs,
        #[arg(long, default_value = "")]
        subject: String,
        #[arg(long, default_value = "")]
        condition: String,
        /// Largest reference delay searched, seconds.
        #[arg(long, default_value_t = 2.0)]
        max_lag: f64,
    },
    /// Collect metrics reports into one summary CSV.
    Report {
        #[arg(required = true)]
        reports: Vec<PathBuf>,
    },
}

#[derive(Debug, Clone, Args)]
pub struct ReferenceArgs {
    /// Reference displacement: a ground-truth CSV or a two-column time series.
    #[arg(long)]
    pub reference: Option<PathBuf>,
    /// Part to read from a ground-truth CSV (first part by default).
    #[arg(long)]
    pub part: Option<String>,
}

/// Loads a reference displacement and resamples it to `rate`.
pub fn load_reference(path: &Path, part: Option<&str>, rate: f64) -> Result<TimeSeries> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Format(format!("{}: {other:?}", path.display())),
    })?;
    let headers = reader.headers()?.clone();
    if headers.get(1).map(str::trim) == Some("part_id") {
        let part = match part {
            Some(p) => p.to_string(),
            None => reader
                .records()
                .next()
                .transpose()?
                .and_then(|r| r.get(1).map(str::to_string))
                .ok_or_else(|| Error::Validation(format!("{} has no rows", path.display())))?,
        };
        return GroundTruth::read_part_csv(path, &part, rate);
    }
    TimeSeries::read_csv(path, rate)
}

/// Depth recording plus its extrinsic calibration.
pub fn load_depth(path: &Path) -> Result<(DepthSequence, ExtrinsicTransform)> {
    if path.is_dir() {
        let sidecar = read_sidecar(&path.join("camera.json"))?;
        Ok((load_depth_sequence(path, DepthFormat::FrameImages)?, sidecar.extrinsics))
    } else {
        let sidecar = read_sidecar(&sidecar_path(path))?;
        Ok((load_depth_sequence(path, DepthFormat::RawBinary)?, sidecar.extrinsics))
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).map_err(|e| Error::io(path, e))?))
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

/// Runs one command and records its files in the output manifest.
pub fn run(cli: &Cli) -> Result<()> {
    let g = &cli.global;
    std::fs::create_dir_all(&g.out).map_err(|e| Error::io(&g.out, e))?;
    let (stage, seed, inputs, outputs) = match &cli.command {
        Command::Synth { scene, frame_images } => {
            let (outputs, seed) = cmd_synth(scene, &g.out, g.seed, *frame_images)?;
            ("synth", Some(seed), vec![scene.clone()], outputs)
        }
        Command::Simulate {
            depth,
            radar,
            baseline,
            reference,
        } => {
            let seed = g.seed.unwrap_or(0);
            let outputs = cmd_simulate(depth, radar.as_deref(), &g.out, seed, *baseline, reference)?;
            let mut inputs = if depth.is_dir() {
                vec![depth.join("camera.json"), depth.join("timestamps.csv")]
            } else {
                vec![depth.clone(), sidecar_path(depth)]
            };
            inputs.extend(radar.iter().cloned());
            inputs.extend(reference.reference.iter().cloned());
            ("simulate", Some(seed), inputs, outputs)
        }
        Command::Evaluate {
            cube_a,
            cube_b,
            region,
            reference,
            subject,
            condition,
            max_lag,
        } => {
            let inputs_eval = EvaluationInputs {
                subject: subject.clone(),
                condition: condition.clone(),
                reference: None,
                max_lag_s: *max_lag,
            };
            let outputs = cmd_evaluate(
                cube_a,
                cube_b,
                region.as_deref(),
                reference,
                inputs_eval,
                &g.out,
                g.plots,
            )?;
            let mut inputs = vec![cube_a.clone(), cube_b.clone()];
            inputs.extend(region.iter().cloned());
            inputs.extend(reference.reference.iter().cloned());
            ("evaluate", None, inputs, outputs)
        }
        Command::Report { reports } => {
            let outputs = cmd_report(reports, &g.out)?;
            ("report", None, reports.clone(), outputs)
        }
    };
    let mut manifest = RunManifest::load_or_default(&g.out).stage("manifest")?;
    manifest
        .record(stage, seed, &inputs, &g.out, &outputs)
        .stage("manifest")?;
    manifest.write(&g.out).stage("manifest")
}

/// Returns the written files and the seed used.
pub fn cmd_synth(scene_path: &Path, out: &Path, seed: Option<u64>, frame_images: bool) -> Result<(Vec<PathBuf>, u64)> {
    let mut cfg = SceneConfig::from_json_file(scene_path).stage("scene config")?;
    if let Some(seed) = seed {
        cfg.seed = seed;
    }
    let scene = build_scene(&cfg).stage("scene config")?;
    let (seq, truth) = render_sequence(&scene).stage("render")?;
    let depth = out.join("depth.dseq");
    write_dseq(&depth, &seq, &cfg.camera.extrinsics).stage("write depth")?;
    let gt = out.join("ground_truth.csv");
    truth.write_csv(&gt).stage("write ground truth")?;
    let resolved = out.join("scene.json");
    write_json(&resolved, &cfg).stage("write scene")?;
    let mut outputs = vec![depth.clone(), sidecar_path(&depth), gt, resolved];
    if frame_images {
        let dir = out.join("frames");
        std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        write_frame_images(&dir, &seq, &cfg.camera.extrinsics).stage("write frames")?;
        outputs.push(dir.join("camera.json"));
        outputs.push(dir.join("timestamps.csv"));
    }
    log::info!("rendered {} frames", seq.len());
    Ok((outputs, cfg.seed))
}

pub fn cmd_simulate(
    depth: &Path,
    radar: Option<&Path>,
    out: &Path,
    seed: u64,
    baseline: bool,
    reference: &ReferenceArgs,
) -> Result<Vec<PathBuf>> {
    let cfg = match radar {
        Some(p) => SimulationConfig::from_json_file(p).stage("radar config")?,
        None => SimulationConfig::default(),
    };
    let (seq, extrinsics) = load_depth(depth).stage("depth input")?;
    let sim = simulate(&seq, &extrinsics, &cfg, seed)?;

    let mut outputs = Vec::new();
    let cube_path = out.join("proposed.ifcb");
    write_ifcb(&cube_path, &sim.cube).stage("write cube")?;
    outputs.push(cube_path);
    let centers = out.join("centers.csv");
    write_centers_csv(&sim.centers, &centers).stage("write centers")?;
    outputs.push(centers);
    let tracked = out.join("tracked_centers.csv");
    write_centers_csv(&sim.tracked, &tracked).stage("write centers")?;
    outputs.push(tracked);
    let map = out.join("power_map.csv");
    sim.power_map.write_csv(create(&map)?).stage("write power map")?;
    outputs.push(map);
    let resolved = out.join("simulation.json");
    write_json(&resolved, &cfg).stage("write config")?;
    outputs.push(resolved);

    if baseline {
        let reference = match &reference.reference {
            Some(p) => Some(load_reference(p, reference.part.as_deref(), cfg.radar.slow_rate).stage("reference")?),
            None => None,
        };
        // distinct noise stream from the proposed cube
        let (model, cube) = simulate_baseline(&sim.tracked, &sim.cube, &cfg, reference.as_ref(), seed ^ 0x5eed_ba5e)?;
        let path = out.join("baseline.ifcb");
        write_ifcb(&path, &cube).stage("write baseline")?;
        outputs.push(path);
        let model_path = out.join("baseline_model.json");
        write_json(&model_path, &model).stage("write baseline")?;
        outputs.push(model_path);
    }
    Ok(outputs)
}

fn default_region(cube: &IFCube) -> Result<EvaluationRegion> {
    let image = radar_image(cube, None)?;
    let cell = image
        .argmax()
        .ok_or_else(|| Error::Domain("radar image power is zero everywhere".into()))?;
    let mut region = EvaluationRegion::new(cell.range);
    region.range_half_width = region.range_half_width.min(cell.range * 0.99);
    Ok(region)
}

pub fn cmd_evaluate(
    cube_a: &Path,
    cube_b: &Path,
    region: Option<&Path>,
    reference: &ReferenceArgs,
    mut inputs: EvaluationInputs,
    out: &Path,
    plots: PlotFormat,
) -> Result<Vec<PathBuf>> {
    let a = read_ifcb(cube_a).stage("read cube a")?;
    let b = read_ifcb(cube_b).stage("read cube b")?;
    let region = match region {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| Error::io(p, e))
                .stage("region")?;
            serde_json::from_str(&text).map_err(Error::from).stage("region")?
        }
        None => default_region(&a).stage("region")?,
    };
    if let Some(p) = &reference.reference {
        inputs.reference = Some(load_reference(p, reference.part.as_deref(), a.slow.rate).stage("reference")?);
    }
    let ev = evaluate(&a, &b, &region, &inputs)?;

    let mut outputs = Vec::new();
    let report = out.join("report.json");
    ev.report.write_json(&report).stage("write report")?;
    outputs.push(report);
    for (tag, p) in [("a", &ev.a), ("b", &ev.b)] {
        let image = out.join(format!("image_{tag}.csv"));
        p.image.write_csv(create(&image)?).stage("write image")?;
        let disp = out.join(format!("displacement_{tag}.csv"));
        p.displacement.write_csv(create(&disp)?).stage("write displacement")?;
        let spec = out.join(format!("spectrogram_{tag}.csv"));
        p.spectrogram.write_csv(create(&spec)?).stage("write spectrogram")?;
        outputs.extend([image, disp, spec]);
        if let Some(f) = plot_radar_image(&out.join(format!("image_{tag}")), &p.image, plots).stage("plot")? {
            outputs.push(f);
        }
        if let Some(f) =
            plot_spectrogram(&out.join(format!("spectrogram_{tag}")), &p.spectrogram, plots).stage("plot")?
        {
            outputs.push(f);
        }
    }
    let traces = [("a", &ev.a.displacement), ("b", &ev.b.displacement)];
    if let Some(f) = plot_displacement(&out.join("displacement"), &traces, false, plots).stage("plot")? {
        outputs.push(f);
    }
    if let Some(f) = plot_displacement(&out.join("displacement_hf"), &traces, true, plots).stage("plot")? {
        outputs.push(f);
    }
    Ok(outputs)
}

pub fn cmd_report(reports: &[PathBuf], out: &Path) -> Result<Vec<PathBuf>> {
    let loaded = reports
        .iter()
        .map(|p| MetricsReport::read_json(p))
        .collect::<Result<Vec<_>>>()
        .stage("read reports")?;
    let path = out.join("summary.csv");
    write_summary_csv(&loaded, &path).stage("write summary")?;
    for r in &loaded {
        println!(
            "{:<12} {:<10} rho_i {:.3}  rho_d {:.3}  rho_d_hf {:.3}  rho_s {:.3}  f_rr {:.3}/{:.3} Hz",
            r.subject,
            r.condition,
            r.image.rho,
            r.displacement.rho,
            r.displacement_hf.rho,
            r.rho_s,
            r.rates_hz.0,
            r.rates_hz.1
        );
    }
    Ok(vec![path])
}
