//! Uniformly sampled real time series.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    /// Time of the first sample, seconds.
    pub start: f64,
    /// Sample rate, Hz.
    pub rate: f64,
    pub values: Vec<f64>,
}

impl TimeSeries {
    pub fn new(start: f64, rate: f64, values: Vec<f64>) -> Self {
        Self { start, rate, values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn time(&self, i: usize) -> f64 {
        self.start + i as f64 / self.rate
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.time(i)).collect()
    }

    /// Span from first to last sample.
    pub fn duration(&self) -> f64 {
        self.len().saturating_sub(1) as f64 / self.rate
    }

    pub fn end(&self) -> f64 {
        self.start + self.duration()
    }

    /// Linear interpolation; `None` outside the sampled span.
    pub fn value_at(&self, t: f64) -> Option<f64> {
        if self.is_empty() {
            return None;
        }
        let x = (t - self.start) * self.rate;
        let last = (self.len() - 1) as f64;
        if x < -1e-9 || x > last + 1e-9 {
            return None;
        }
        let x = x.clamp(0.0, last);
        let i = (x.floor() as usize).min(self.len() - 1);
        if i + 1 >= self.len() {
            return Some(self.values[i]);
        }
        let f = x - i as f64;
        Some(self.values[i] * (1.0 - f) + self.values[i + 1] * f)
    }

    /// Resamples onto `rate` over the overlap of this series with `[start, start + n/rate)`.
    pub fn resample(&self, start: f64, rate: f64, samples: usize) -> Result<TimeSeries> {
        let values = (0..samples)
            .map(|i| {
                let t = start + i as f64 / rate;
                self.value_at(t)
                    .ok_or_else(|| Error::Domain(format!("time {t:.3} s outside the series span")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(TimeSeries::new(start, rate, values))
    }

    /// Builds a uniform series by linear interpolation of `(t, value)` samples.
    pub fn from_samples(times: &[f64], values: &[f64], rate: f64) -> Result<TimeSeries> {
        if times.len() != values.len() || times.len() < 2 {
            return Err(Error::Validation("need at least two (time, value) samples".into()));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Validation("sample times must be strictly increasing".into()));
        }
        let n = ((times[times.len() - 1] - times[0]) * rate + 1e-9).floor() as usize + 1;
        let mut out = Vec::with_capacity(n);
        let mut j = 0;
        for i in 0..n {
            let t = times[0] + i as f64 / rate;
            while j + 2 < times.len() && times[j + 1] < t {
                j += 1;
            }
            let f = ((t - times[j]) / (times[j + 1] - times[j])).clamp(0.0, 1.0);
            out.push(values[j] * (1.0 - f) + values[j + 1] * f);
        }
        Ok(TimeSeries::new(times[0], rate, out))
    }

    /// Reads a two-column CSV (`time_s`, value) with a header row.
    pub fn read_csv(path: &Path, rate: f64) -> Result<TimeSeries> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mut reader = csv::Reader::from_reader(file);
        let mut t = Vec::new();
        let mut v = Vec::new();
        for rec in reader.records() {
            let rec = rec?;
            if rec.len() < 2 {
                return Err(Error::Format(format!("{}: expected two columns", path.display())));
            }
            let parse = |s: &str| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::Format(format!("{}: bad number {s:?}", path.display())))
            };
            t.push(parse(&rec[0])?);
            v.push(parse(&rec[1])?);
        }
        Self::from_samples(&t, &v, rate)
    }

    pub fn write_csv(&self, path: &Path, value_header: &str) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["time_s", value_header])?;
        for (i, v) in self.values.iter().enumerate() {
            w.write_record([format!("{:.6}", self.time(i)), format!("{v:.9e}")])?;
        }
        w.flush().map_err(|e| Error::io(path, e))?;
        Ok(())
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.len().max(1) as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interpolation_is_exact_on_lines() {
        let t: Vec<f64> = (0..10).map(|i| i as f64 / 15.0).collect();
        let v: Vec<f64> = t.iter().map(|x| 3.0 * x - 1.0).collect();
        let s = TimeSeries::from_samples(&t, &v, 100.0).unwrap();
        assert_eq!(s.len(), 61);
        for (i, y) in s.values.iter().enumerate() {
            assert!((y - (3.0 * s.time(i) - 1.0)).abs() < 1e-12);
        }
        assert!(s.value_at(10.0).is_none());
    }

    #[test]
    fn csv_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.csv");
        let s = TimeSeries::new(0.0, 10.0, (0..30).map(|i| (i as f64 * 0.3).sin()).collect());
        s.write_csv(&p, "v").unwrap();
        let back = TimeSeries::read_csv(&p, 10.0).unwrap();
        assert_eq!(back.len(), s.len());
        for (a, b) in back.values.iter().zip(&s.values) {
            assert!((a - b).abs() < 1e-8);
        }
    }
}
