use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::em_scatter::{AntennaArray, RadarConfig};
use crate::error::{Error, Result};
use crate::fmcw_sim::synth::IFCube;
use crate::fmcw_sim::tracking::SlowTimeGrid;

pub const IFCB_MAGIC: &[u8; 4] = b"IFCB";

#[derive(Debug, Clone, Serialize, Deserialize)]
struct CubeHeader {
    radar: RadarConfig,
    array: AntennaArray,
    slow_start: f64,
    noise_snr_db: Option<f64>,
}

/// Writes `IFCB`, dims (M, fast, slow) as u32, JSON header length + bytes,
/// then f32 re/im pairs in (M, fast, slow) row-major order. Little-endian.
pub fn write_ifcb(path: &Path, cube: &IFCube) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    write_ifcb_to(&mut w, cube).map_err(|e| match e {
        Error::Format(m) => Error::Format(m),
        other => other,
    })?;
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_ifcb_to(mut w: impl Write, cube: &IFCube) -> Result<()> {
    let io = |e: std::io::Error| Error::Format(format!("writing IF cube: {e}"));
    let header = CubeHeader {
        radar: cube.radar.clone(),
        array: cube.array.clone(),
        slow_start: cube.slow.start,
        noise_snr_db: cube.noise_snr_db,
    };
    let json = serde_json::to_vec(&header)?;
    w.write_all(IFCB_MAGIC).map_err(io)?;
    for d in [cube.channels, cube.fast_samples, cube.slow.samples] {
        w.write_all(&(d as u32).to_le_bytes()).map_err(io)?;
    }
    w.write_all(&(json.len() as u32).to_le_bytes()).map_err(io)?;
    w.write_all(&json).map_err(io)?;
    for m in 0..cube.channels {
        for f in 0..cube.fast_samples {
            for s in 0..cube.slow.samples {
                let x = cube.get(m, f, s);
                w.write_all(&(x.re as f32).to_le_bytes()).map_err(io)?;
                w.write_all(&(x.im as f32).to_le_bytes()).map_err(io)?;
            }
        }
    }
    Ok(())
}

pub fn read_ifcb(path: &Path) -> Result<IFCube> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_ifcb_from(BufReader::new(file)).map_err(|e| match e {
        Error::Format(m) => Error::Format(format!("{}: {m}", path.display())),
        other => other,
    })
}

pub fn read_ifcb_from(mut r: impl Read) -> Result<IFCube> {
    let trunc = |_| Error::Format("truncated IF cube".into());
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic).map_err(trunc)?;
    if &magic != IFCB_MAGIC {
        return Err(Error::Format("bad IF cube magic".into()));
    }
    let mut word = [0u8; 4];
    let mut dims = [0usize; 4];
    for d in dims.iter_mut() {
        r.read_exact(&mut word).map_err(trunc)?;
        *d = u32::from_le_bytes(word) as usize;
    }
    let [channels, fast, slow, json_len] = dims;
    let mut json = vec![0u8; json_len];
    r.read_exact(&mut json).map_err(trunc)?;
    let header: CubeHeader =
        serde_json::from_slice(&json).map_err(|e| Error::Format(format!("IF cube header: {e}")))?;
    if header.array.num_virtual() != channels || header.radar.fast_samples != fast {
        return Err(Error::Format("IF cube header disagrees with dimensions".into()));
    }
    let mut raw = vec![0u8; channels * fast * slow * 8];
    r.read_exact(&mut raw).map_err(trunc)?;
    let grid = SlowTimeGrid::new(header.slow_start, header.radar.slow_rate, slow);
    let mut cube = IFCube::zeros(header.radar, header.array, grid);
    cube.noise_snr_db = header.noise_snr_db;
    let mut k = 0;
    for m in 0..channels {
        for f in 0..fast {
            for s in 0..slow {
                let re = f32::from_le_bytes(raw[k..k + 4].try_into().unwrap());
                let im = f32::from_le_bytes(raw[k + 4..k + 8].try_into().unwrap());
                cube.data[(m * slow + s) * fast + f] = Complex64::new(re as f64, im as f64);
                k += 8;
            }
        }
    }
    cube.validate()?;
    Ok(cube)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_cube() -> IFCube {
        let cfg = RadarConfig {
            fast_samples: 8,
            ..RadarConfig::default()
        };
        let mut cube = IFCube::zeros(cfg, AntennaArray::linear_3x4(), SlowTimeGrid::new(0.5, 100.0, 5));
        for (i, x) in cube.data.iter_mut().enumerate() {
            *x = Complex64::new(i as f64 * 0.25, -(i as f64) * 0.5);
        }
        cube.noise_snr_db = Some(-20.0);
        cube
    }

    #[test]
    fn roundtrip() {
        let cube = sample_cube();
        let mut buf = Vec::new();
        write_ifcb_to(&mut buf, &cube).unwrap();
        let back = read_ifcb_from(buf.as_slice()).unwrap();
        assert_eq!(back, cube);
    }

    #[test]
    fn corrupt_inputs() {
        let cube = sample_cube();
        let mut buf = Vec::new();
        write_ifcb_to(&mut buf, &cube).unwrap();
        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(matches!(read_ifcb_from(bad.as_slice()), Err(Error::Format(_))));
        buf.truncate(buf.len() - 3);
        assert!(matches!(read_ifcb_from(buf.as_slice()), Err(Error::Format(_))));
    }
}
