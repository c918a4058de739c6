//! Depth-sequence file formats.
//!
//! `DSEQ` raw binary, all little-endian:
//!
//! ```text
//! "DSEQ" | version u16 | width u16 | height u16 | frames u32 | rate f64
//! per frame: timestamp f64 | width*height u16 depths (mm, 0 = invalid)
//! ```
//!
//! Intrinsics and extrinsics live in a JSON sidecar next to the file
//! (`depth.dseq` -> `depth.json`).
//!
//! The per-frame image layout is a directory holding `camera.json`,
//! `timestamps.csv` (`frame,timestamp_s`) and 16-bit grayscale PNGs named
//! `frame_00000.png`, `frame_00001.png`, ...

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::depth::{DepthFrame, DepthSequence, Intrinsics};
use super::transform::ExtrinsicTransform;
use crate::error::{Error, Result};

pub const DSEQ_MAGIC: &[u8; 4] = b"DSEQ";
pub const DSEQ_VERSION: u16 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DepthFormat {
    RawBinary,
    FrameImages,
}

/// Camera calibration stored beside a depth recording.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CameraSidecar {
    pub intrinsics: Intrinsics,
    #[serde(default)]
    pub extrinsics: ExtrinsicTransform,
    /// Only used by the per-frame image layout.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nominal_rate: Option<f64>,
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    path.with_extension("json")
}

pub fn read_sidecar(path: &Path) -> Result<CameraSidecar> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

pub fn write_sidecar(path: &Path, sidecar: &CameraSidecar) -> Result<()> {
    let text = serde_json::to_string_pretty(sidecar)?;
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn load_depth_sequence(path: &Path, format: DepthFormat) -> Result<DepthSequence> {
    match format {
        DepthFormat::RawBinary => read_dseq(path),
        DepthFormat::FrameImages => read_frame_images(path),
    }
}

/// Writes `seq` as DSEQ plus its JSON sidecar. Depths are rounded to whole
/// millimeters.
pub fn write_dseq(path: &Path, seq: &DepthSequence, extrinsics: &ExtrinsicTransform) -> Result<()> {
    let first = &seq.frames()[0];
    let dim = |n: usize, what: &str| u16::try_from(n).map_err(|_| Error::Validation(format!("{what} {n} exceeds u16")));
    let width = dim(first.width, "width")?;
    let height = dim(first.height, "height")?;
    let count = u32::try_from(seq.len()).map_err(|_| Error::Validation("too many frames for DSEQ".into()))?;

    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    let mut header = Vec::with_capacity(22);
    header.extend_from_slice(DSEQ_MAGIC);
    header.extend_from_slice(&DSEQ_VERSION.to_le_bytes());
    header.extend_from_slice(&width.to_le_bytes());
    header.extend_from_slice(&height.to_le_bytes());
    header.extend_from_slice(&count.to_le_bytes());
    header.extend_from_slice(&seq.nominal_rate().to_le_bytes());
    out.write_all(&header).map_err(|e| Error::io(path, e))?;

    let mut buf = Vec::with_capacity(8 + 2 * first.depth_mm.len());
    for frame in seq.frames() {
        buf.clear();
        buf.extend_from_slice(&frame.timestamp.to_le_bytes());
        for &d in &frame.depth_mm {
            let mm = d.round();
            if !(0.0..=u16::MAX as f32).contains(&mm) {
                return Err(Error::Validation(format!("depth {d} mm not encodable")));
            }
            buf.extend_from_slice(&(mm as u16).to_le_bytes());
        }
        out.write_all(&buf).map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))?;

    write_sidecar(
        &sidecar_path(path),
        &CameraSidecar {
            intrinsics: first.intrinsics,
            extrinsics: *extrinsics,
            nominal_rate: None,
        },
    )
}

pub fn read_dseq(path: &Path) -> Result<DepthSequence> {
    let sidecar = read_sidecar(&sidecar_path(path))?;
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_dseq_from(BufReader::new(file), sidecar.intrinsics)
}

pub fn read_dseq_from(mut input: impl Read, intrinsics: Intrinsics) -> Result<DepthSequence> {
    let mut header = [0u8; 22];
    input
        .read_exact(&mut header)
        .map_err(|_| Error::Format("DSEQ header truncated".into()))?;
    if &header[0..4] != DSEQ_MAGIC {
        return Err(Error::Format(format!(
            "bad magic {:?}, expected \"DSEQ\"",
            String::from_utf8_lossy(&header[0..4])
        )));
    }
    let version = u16::from_le_bytes([header[4], header[5]]);
    if version != DSEQ_VERSION {
        return Err(Error::Format(format!("unsupported DSEQ version {version}")));
    }
    let width = u16::from_le_bytes([header[6], header[7]]) as usize;
    let height = u16::from_le_bytes([header[8], header[9]]) as usize;
    let count = u32::from_le_bytes(header[10..14].try_into().unwrap()) as usize;
    let rate = f64::from_le_bytes(header[14..22].try_into().unwrap());
    if count == 0 {
        return Err(Error::Validation("DSEQ file holds zero frames".into()));
    }
    if width == 0 || height == 0 {
        return Err(Error::Format(format!("DSEQ dimensions {width}x{height}")));
    }

    let mut frames = Vec::with_capacity(count);
    let mut raw = vec![0u8; 8 + 2 * width * height];
    for i in 0..count {
        input
            .read_exact(&mut raw)
            .map_err(|_| Error::Format(format!("DSEQ truncated in frame {i} of {count}")))?;
        let timestamp = f64::from_le_bytes(raw[0..8].try_into().unwrap());
        let depth = raw[8..]
            .chunks_exact(2)
            .map(|b| u16::from_le_bytes([b[0], b[1]]) as f32)
            .collect();
        frames.push(DepthFrame::new(width, height, timestamp, depth, intrinsics)?);
    }
    DepthSequence::new(frames, rate)
}

fn read_frame_images(dir: &Path) -> Result<DepthSequence> {
    let sidecar = read_sidecar(&dir.join("camera.json"))?;
    let rate = sidecar.nominal_rate.unwrap_or(super::depth::DEFAULT_DEPTH_RATE_HZ);
    let ts_path = dir.join("timestamps.csv");
    let mut reader = csv::Reader::from_path(&ts_path)?;
    let mut stamps: Vec<(usize, f64)> = Vec::new();
    for row in reader.deserialize() {
        let (idx, t): (usize, f64) = row?;
        stamps.push((idx, t));
    }
    if stamps.is_empty() {
        return Err(Error::Validation(format!("{} lists no frames", ts_path.display())));
    }
    let mut frames = Vec::with_capacity(stamps.len());
    for (idx, t) in stamps {
        let img_path = dir.join(format!("frame_{idx:05}.png"));
        let img = image::open(&img_path)?.into_luma16();
        let (w, h) = img.dimensions();
        let depth = img.into_raw().into_iter().map(|d| d as f32).collect();
        frames.push(DepthFrame::new(w as usize, h as usize, t, depth, sidecar.intrinsics)?);
    }
    DepthSequence::new(frames, rate)
}

/// Writes the per-frame PNG layout understood by [`DepthFormat::FrameImages`].
pub fn write_frame_images(dir: &Path, seq: &DepthSequence, extrinsics: &ExtrinsicTransform) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let first = &seq.frames()[0];
    write_sidecar(
        &dir.join("camera.json"),
        &CameraSidecar {
            intrinsics: first.intrinsics,
            extrinsics: *extrinsics,
            nominal_rate: Some(seq.nominal_rate()),
        },
    )?;
    let ts_path = dir.join("timestamps.csv");
    let mut writer = csv::Writer::from_path(&ts_path)?;
    writer.write_record(["frame", "timestamp_s"])?;
    for (i, frame) in seq.frames().iter().enumerate() {
        writer.write_record([i.to_string(), format!("{:?}", frame.timestamp)])?;
        let pixels: Vec<u16> = frame.depth_mm.iter().map(|d| d.round() as u16).collect();
        let img = image::ImageBuffer::<image::Luma<u16>, _>::from_raw(frame.width as u32, frame.height as u32, pixels)
            .ok_or_else(|| Error::Validation("frame buffer size mismatch".into()))?;
        img.save(dir.join(format!("frame_{i:05}.png")))?;
    }
    writer.flush().map_err(|e| Error::io(&ts_path, e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_seq(n: usize) -> DepthSequence {
        let intr = Intrinsics {
            fx: 50.0,
            fy: 50.0,
            cx: 2.0,
            cy: 1.5,
        };
        let frames = (0..n)
            .map(|i| {
                let depth = (0..20)
                    .map(|p| if p % 7 == 0 { 0.0 } else { 900.0 + (p + i) as f32 })
                    .collect();
                DepthFrame::new(5, 4, i as f64 / 15.0, depth, intr).unwrap()
            })
            .collect();
        DepthSequence::new(frames, 15.0).unwrap()
    }

    #[test]
    fn dseq_roundtrip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.dseq");
        let seq = sample_seq(6);
        write_dseq(&path, &seq, &ExtrinsicTransform::colocated()).unwrap();
        let back = load_depth_sequence(&path, DepthFormat::RawBinary).unwrap();
        assert_eq!(back, seq);
        let side = read_sidecar(&sidecar_path(&path)).unwrap();
        assert_eq!(side.extrinsics, ExtrinsicTransform::colocated());
    }

    #[test]
    fn frame_images_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let seq = sample_seq(3);
        write_frame_images(dir.path(), &seq, &ExtrinsicTransform::colocated()).unwrap();
        let back = load_depth_sequence(dir.path(), DepthFormat::FrameImages).unwrap();
        assert_eq!(back, seq);
    }

    #[test]
    fn corrupt_header_is_format_error() {
        let intr = Intrinsics {
            fx: 1.0,
            fy: 1.0,
            cx: 0.0,
            cy: 0.0,
        };
        let mut bytes = b"DSEX".to_vec();
        bytes.extend_from_slice(&[0u8; 18]);
        assert!(matches!(read_dseq_from(&bytes[..], intr), Err(Error::Format(_))));
        assert!(matches!(read_dseq_from(&b"DS"[..], intr), Err(Error::Format(_))));
    }

    #[test]
    fn zero_frames_is_validation_error() {
        let intr = Intrinsics {
            fx: 1.0,
            fy: 1.0,
            cx: 0.0,
            cy: 0.0,
        };
        let mut bytes = DSEQ_MAGIC.to_vec();
        bytes.extend_from_slice(&DSEQ_VERSION.to_le_bytes());
        bytes.extend_from_slice(&4u16.to_le_bytes());
        bytes.extend_from_slice(&4u16.to_le_bytes());
        bytes.extend_from_slice(&0u32.to_le_bytes());
        bytes.extend_from_slice(&15.0f64.to_le_bytes());
        assert!(matches!(read_dseq_from(&bytes[..], intr), Err(Error::Validation(_))));
    }

    #[test]
    fn non_monotone_timestamps_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.dseq");
        write_dseq(&path, &sample_seq(3), &ExtrinsicTransform::colocated()).unwrap();
        let mut bytes = std::fs::read(&path).unwrap();
        // overwrite the second frame's timestamp with 0.0
        let frame_len = 8 + 2 * 20;
        let off = 22 + frame_len;
        bytes[off..off + 8].copy_from_slice(&0.0f64.to_le_bytes());
        std::fs::write(&path, bytes).unwrap();
        assert!(matches!(read_dseq(&path), Err(Error::Validation(_))));
    }
}
