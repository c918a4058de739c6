//! Minimal PNG and SVG plots of radar images, displacement traces and spectrograms.
//!
//! PNG output carries no text; SVG output adds a title and axis ranges.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use image::{Rgb, RgbImage};

use crate::dsp::{DisplacementTrace, RadarImage, SpectrogramData};
use crate::error::{Error, Result};
use crate::series::TimeSeries;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PlotFormat {
    #[default]
    None,
    Png,
    Svg,
}

impl PlotFormat {
    pub fn extension(self) -> Option<&'static str> {
        match self {
            PlotFormat::None => None,
            PlotFormat::Png => Some("png"),
            PlotFormat::Svg => Some("svg"),
        }
    }
}

impl FromStr for PlotFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "none" => Ok(PlotFormat::None),
            "png" => Ok(PlotFormat::Png),
            "svg" => Ok(PlotFormat::Svg),
            other => Err(Error::Validation(format!(
                "unknown plot format {other:?} (none, png, svg)"
            ))),
        }
    }
}

/// Row-major grid of values with the data extents of its axes.
#[derive(Debug, Clone)]
pub struct Heatmap<'a> {
    pub title: &'a str,
    pub rows: usize,
    pub cols: usize,
    /// `rows * cols` values; row 0 is drawn at the bottom.
    pub values: &'a [f64],
    pub x_range: (f64, f64),
    pub y_range: (f64, f64),
    pub x_label: &'a str,
    pub y_label: &'a str,
}

const VIRIDIS: [[f64; 3]; 5] = [
    [68.0, 1.0, 84.0],
    [59.0, 82.0, 139.0],
    [33.0, 145.0, 140.0],
    [94.0, 201.0, 98.0],
    [253.0, 231.0, 37.0],
];

fn colormap(x: f64) -> [u8; 3] {
    let x = if x.is_finite() { x.clamp(0.0, 1.0) } else { 0.0 };
    let pos = x * (VIRIDIS.len() - 1) as f64;
    let i = (pos.floor() as usize).min(VIRIDIS.len() - 2);
    let f = pos - i as f64;
    let mut out = [0u8; 3];
    for c in 0..3 {
        out[c] = (VIRIDIS[i][c] * (1.0 - f) + VIRIDIS[i + 1][c] * f).round() as u8;
    }
    out
}

fn normalize(values: &[f64]) -> (f64, f64) {
    let lo = values
        .iter()
        .cloned()
        .filter(|v| v.is_finite())
        .fold(f64::INFINITY, f64::min);
    let hi = values
        .iter()
        .cloned()
        .filter(|v| v.is_finite())
        .fold(f64::NEG_INFINITY, f64::max);
    if lo.is_finite() && hi > lo {
        (lo, hi)
    } else {
        (0.0, 1.0)
    }
}

fn with_extension(path: &Path, format: PlotFormat) -> Option<PathBuf> {
    format.extension().map(|ext| path.with_extension(ext))
}

/// Writes a heatmap; returns the written path, or `None` for [`PlotFormat::None`].
pub fn write_heatmap(path: &Path, map: &Heatmap, format: PlotFormat) -> Result<Option<PathBuf>> {
    if map.values.len() != map.rows * map.cols || map.rows == 0 || map.cols == 0 {
        return Err(Error::Validation("heatmap dimensions do not match its data".into()));
    }
    let Some(out) = with_extension(path, format) else {
        return Ok(None);
    };
    let (lo, hi) = normalize(map.values);
    match format {
        PlotFormat::Png => {
            let scale_x = (640 / map.cols).clamp(1, 16) as u32;
            let scale_y = (400 / map.rows).clamp(1, 16) as u32;
            let mut img = RgbImage::new(map.cols as u32 * scale_x, map.rows as u32 * scale_y);
            for (x, y, px) in img.enumerate_pixels_mut() {
                let c = (x / scale_x) as usize;
                let r = map.rows - 1 - (y / scale_y) as usize;
                *px = Rgb(colormap((map.values[r * map.cols + c] - lo) / (hi - lo)));
            }
            img.save(&out)?;
        }
        PlotFormat::Svg => {
            let (w, h, m) = (640.0, 400.0, 50.0);
            let cw = w / map.cols as f64;
            let ch = h / map.rows as f64;
            let mut s = svg_header(w + 2.0 * m, h + 2.0 * m);
            for r in 0..map.rows {
                for c in 0..map.cols {
                    let [red, g, b] = colormap((map.values[r * map.cols + c] - lo) / (hi - lo));
                    let _ = writeln!(
                        s,
                        r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="rgb({red},{g},{b})"/>"#,
                        m + c as f64 * cw,
                        m + h - (r + 1) as f64 * ch,
                        cw + 0.05,
                        ch + 0.05
                    );
                }
            }
            svg_frame(
                &mut s,
                map.title,
                map.x_label,
                map.y_label,
                map.x_range,
                map.y_range,
                w,
                h,
                m,
            );
            std::fs::write(&out, s).map_err(|e| Error::io(&out, e))?;
        }
        PlotFormat::None => unreachable!(),
    }
    Ok(Some(out))
}

/// Writes overlaid line plots of time series.
pub fn write_lines(
    path: &Path,
    title: &str,
    y_label: &str,
    series: &[(&str, &TimeSeries)],
    format: PlotFormat,
) -> Result<Option<PathBuf>> {
    let Some(out) = with_extension(path, format) else {
        return Ok(None);
    };
    let all: Vec<f64> = series.iter().flat_map(|(_, s)| s.values.iter().cloned()).collect();
    let (lo, hi) = normalize(&all);
    let t0 = series.iter().map(|(_, s)| s.start).fold(f64::INFINITY, f64::min);
    let t1 = series.iter().map(|(_, s)| s.end()).fold(f64::NEG_INFINITY, f64::max);
    let (t0, t1) = if t0.is_finite() && t1 > t0 {
        (t0, t1)
    } else {
        (0.0, 1.0)
    };
    let colors = [[31u8, 119, 180], [255, 127, 14], [44, 160, 44], [214, 39, 40]];
    let (w, h, m) = (800.0, 320.0, 50.0);
    let to_px = |t: f64, v: f64| (m + (t - t0) / (t1 - t0) * w, m + h - (v - lo) / (hi - lo) * h);
    match format {
        PlotFormat::Png => {
            let mut img = RgbImage::from_pixel((w + 2.0 * m) as u32, (h + 2.0 * m) as u32, Rgb([255, 255, 255]));
            let black = Rgb([0, 0, 0]);
            for (a, b) in [
                ((m, m), (m + w, m)),
                ((m + w, m), (m + w, m + h)),
                ((m + w, m + h), (m, m + h)),
                ((m, m + h), (m, m)),
            ] {
                draw_line(&mut img, a, b, black);
            }
            for (k, (_, s)) in series.iter().enumerate() {
                let color = Rgb(colors[k % colors.len()]);
                let pts: Vec<(f64, f64)> = s.values.iter().enumerate().map(|(i, &v)| to_px(s.time(i), v)).collect();
                for pair in pts.windows(2) {
                    draw_line(&mut img, pair[0], pair[1], color);
                }
            }
            img.save(&out)?;
        }
        PlotFormat::Svg => {
            let mut s = svg_header(w + 2.0 * m, h + 2.0 * m);
            for (k, (name, ts)) in series.iter().enumerate() {
                let [r, g, b] = colors[k % colors.len()];
                let mut pts = String::new();
                for (i, &v) in ts.values.iter().enumerate() {
                    let (x, y) = to_px(ts.time(i), v);
                    let _ = write!(pts, "{x:.1},{y:.1} ");
                }
                let _ = writeln!(
                    s,
                    r#"<polyline fill="none" stroke="rgb({r},{g},{b})" stroke-width="1" points="{}"/>"#,
                    pts.trim_end()
                );
                let _ = writeln!(
                    s,
                    r#"<text x="{:.0}" y="{:.0}" font-size="12" fill="rgb({r},{g},{b})">{}</text>"#,
                    m + w - 120.0,
                    m + 16.0 + 14.0 * k as f64,
                    escape(name)
                );
            }
            svg_frame(&mut s, title, "time (s)", y_label, (t0, t1), (lo, hi), w, h, m);
            std::fs::write(&out, s).map_err(|e| Error::io(&out, e))?;
        }
        PlotFormat::None => unreachable!(),
    }
    Ok(Some(out))
}

fn draw_line(img: &mut RgbImage, a: (f64, f64), b: (f64, f64), color: Rgb<u8>) {
    let steps = ((b.0 - a.0).abs().max((b.1 - a.1).abs()).ceil() as usize).max(1);
    for i in 0..=steps {
        let f = i as f64 / steps as f64;
        let x = (a.0 + (b.0 - a.0) * f).round();
        let y = (a.1 + (b.1 - a.1) * f).round();
        if x >= 0.0 && y >= 0.0 && (x as u32) < img.width() && (y as u32) < img.height() {
            img.put_pixel(x as u32, y as u32, color);
        }
    }
}

fn svg_header(w: f64, h: f64) -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w:.0}\" height=\"{h:.0}\" viewBox=\"0 0 {w:.0} {h:.0}\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
    )
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[allow(clippy::too_many_arguments)]
fn svg_frame(
    s: &mut String,
    title: &str,
    x_label: &str,
    y_label: &str,
    x_range: (f64, f64),
    y_range: (f64, f64),
    w: f64,
    h: f64,
    m: f64,
) {
    let _ = writeln!(
        s,
        r#"<rect x="{m}" y="{m}" width="{w}" height="{h}" fill="none" stroke="black"/>"#
    );
    let _ = writeln!(
        s,
        r#"<text x="{m}" y="{:.0}" font-size="14">{}</text>"#,
        m - 15.0,
        escape(title)
    );
    let _ = writeln!(
        s,
        r#"<text x="{m}" y="{:.0}" font-size="11">{:.3}</text><text x="{:.0}" y="{:.0}" font-size="11" text-anchor="end">{:.3}</text>"#,
        m + h + 15.0,
        x_range.0,
        m + w,
        m + h + 15.0,
        x_range.1
    );
    let _ = writeln!(
        s,
        r#"<text x="{:.0}" y="{:.0}" font-size="12" text-anchor="middle">{}</text>"#,
        m + w / 2.0,
        m + h + 35.0,
        escape(x_label)
    );
    let _ = writeln!(
        s,
        r#"<text x="{:.0}" y="{:.0}" font-size="11" text-anchor="end">{:.3e}</text><text x="{:.0}" y="{:.0}" font-size="11" text-anchor="end">{:.3e}</text>"#,
        m - 4.0,
        m + h,
        y_range.0,
        m - 4.0,
        m + 10.0,
        y_range.1
    );
    let _ = writeln!(
        s,
        r#"<text x="12" y="{:.0}" font-size="12" transform="rotate(-90 12 {:.0})" text-anchor="middle">{}</text>"#,
        m + h / 2.0,
        m + h / 2.0,
        escape(y_label)
    );
    s.push_str("</svg>\n");
}

/// Range-azimuth map in dB at the elevation closest to zero.
pub fn plot_radar_image(path: &Path, image: &RadarImage, format: PlotFormat) -> Result<Option<PathBuf>> {
    let (nr, ne, na) = image.shape();
    let el = (0..ne)
        .min_by(|&a, &b| image.elevation_deg[a].abs().total_cmp(&image.elevation_deg[b].abs()))
        .unwrap_or(0);
    let max = image.power.iter().cloned().fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let values: Vec<f64> = (0..nr)
        .flat_map(|r| (0..na).map(move |a| (r, a)))
        .map(|(r, a)| (10.0 * (image.power_at(r, el, a) / max).log10()).max(-40.0))
        .collect();
    write_heatmap(
        path,
        &Heatmap {
            title: "radar image (dB)",
            rows: nr,
            cols: na,
            values: &values,
            x_range: (image.azimuth_deg[0], image.azimuth_deg[na - 1]),
            y_range: (image.range_axis[0], image.range_axis[nr - 1]),
            x_label: "azimuth (deg)",
            y_label: "range (m)",
        },
        format,
    )
}

/// Displacement traces in millimeters.
pub fn plot_displacement(
    path: &Path,
    traces: &[(&str, &DisplacementTrace)],
    high_pass: bool,
    format: PlotFormat,
) -> Result<Option<PathBuf>> {
    let mm: Vec<(String, TimeSeries)> = traces
        .iter()
        .map(|(name, t)| {
            let s = if high_pass { &t.d_hf } else { &t.d };
            (
                name.to_string(),
                TimeSeries::new(s.start, s.rate, s.values.iter().map(|v| v * 1e3).collect()),
            )
        })
        .collect();
    let refs: Vec<(&str, &TimeSeries)> = mm.iter().map(|(n, s)| (n.as_str(), s)).collect();
    let title = if high_pass {
        "high-passed displacement"
    } else {
        "displacement"
    };
    write_lines(path, title, "displacement (mm)", &refs, format)
}

pub fn plot_spectrogram(path: &Path, spec: &SpectrogramData, format: PlotFormat) -> Result<Option<PathBuf>> {
    let (nt, nf) = (spec.times.len(), spec.freqs.len());
    if nt == 0 || nf == 0 {
        return Err(Error::Validation("empty spectrogram".into()));
    }
    // rows are frequencies, columns are times
    let values: Vec<f64> = (0..nf)
        .flat_map(|f| (0..nt).map(move |t| (t, f)))
        .map(|(t, f)| spec.at(t, f))
        .collect();
    write_heatmap(
        path,
        &Heatmap {
            title: "spectrogram (dB)",
            rows: nf,
            cols: nt,
            values: &values,
            x_range: (spec.times[0], spec.times[nt - 1]),
            y_range: (spec.freqs[0], spec.freqs[nf - 1]),
            x_label: "time (s)",
            y_label: "Doppler frequency (Hz)",
        },
        format,
    )
}
