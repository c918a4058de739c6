use std::f64::consts::PI;

use num_complex::Complex64;

/// One biquad section: numerator `b`, denominator `a` with a[0] = 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Biquad {
    pub b: [f64; 3],
    pub a: [f64; 3],
}

impl Biquad {
    pub fn response(&self, omega: f64) -> Complex64 {
        let z1 = Complex64::cis(-omega);
        let z2 = z1 * z1;
        (self.b[0] + self.b[1] * z1 + self.b[2] * z2) / (self.a[0] + self.a[1] * z1 + self.a[2] * z2)
    }
}

/// Digital Butterworth high-pass filter as cascaded second-order sections.
#[derive(Debug, Clone, PartialEq)]
pub struct Butterworth {
    pub order: usize,
    pub cutoff: f64,
    pub sample_rate: f64,
    pub sections: Vec<Biquad>,
}

impl Butterworth {
    /// Bilinear-transform design with the cutoff prewarped to be exact.
    pub fn highpass(order: usize, cutoff: f64, sample_rate: f64) -> Self {
        assert!(order >= 1, "filter order must be at least 1");
        assert!(
            cutoff > 0.0 && cutoff < 0.5 * sample_rate,
            "cutoff must lie below Nyquist"
        );
        let fs2 = 2.0 * sample_rate;
        let wc = fs2 * (PI * cutoff / sample_rate).tan();
        let bilinear = |s: Complex64| (fs2 + s) / (fs2 - s);
        let mut sections = Vec::new();
        // left-half-plane poles of the analog low-pass prototype, upper half first
        for k in 0..order / 2 {
            let theta = PI * (2 * k + order + 1) as f64 / (2 * order) as f64;
            let proto = Complex64::cis(theta);
            let z = bilinear(wc / proto);
            let a = [1.0, -2.0 * z.re, z.norm_sqr()];
            // zeros at z = 1; unit gain at Nyquist (z = −1)
            let gain = (a[0] - a[1] + a[2]) / 4.0;
            sections.push(Biquad {
                b: [gain, -2.0 * gain, gain],
                a,
            });
        }
        if order % 2 == 1 {
            let z = bilinear(Complex64::new(-wc, 0.0)).re;
            let gain = (1.0 + z) / 2.0;
            sections.push(Biquad {
                b: [gain, -gain, 0.0],
                a: [1.0, -z, 0.0],
            });
        }
        Self {
            order,
            cutoff,
            sample_rate,
            sections,
        }
    }

    /// Complex response at `freq` Hz for a single forward pass.
    pub fn response(&self, freq: f64) -> Complex64 {
        let w = 2.0 * PI * freq / self.sample_rate;
        self.sections.iter().map(|s| s.response(w)).product()
    }

    /// Single forward pass with optional initial state per section.
    pub fn filter(&self, x: &[f64], zi: Option<&[[f64; 2]]>) -> Vec<f64> {
        let mut y = x.to_vec();
        for (k, s) in self.sections.iter().enumerate() {
            let [mut z1, mut z2] = zi.map(|z| z[k]).unwrap_or([0.0, 0.0]);
            for v in y.iter_mut() {
                let xin = *v;
                let out = s.b[0] * xin + z1;
                z1 = s.b[1] * xin - s.a[1] * out + z2;
                z2 = s.b[2] * xin - s.a[2] * out;
                *v = out;
            }
        }
        y
    }

    /// Per-section state that makes a unit step input start in steady state.
    pub fn step_initial_state(&self) -> Vec<[f64; 2]> {
        let mut scale = 1.0;
        self.sections
            .iter()
            .map(|s| {
                let g = (s.b[0] + s.b[1] + s.b[2]) / (s.a[0] + s.a[1] + s.a[2]);
                let z = [scale * (g - s.b[0]), scale * (s.b[2] - s.a[2] * g)];
                scale *= g;
                z
            })
            .collect()
    }

    /// Zero-phase forward-backward filtering.
    ///
    /// The input is extended at both ends by odd reflection (up to one
    /// cutoff period, never more than the signal length minus one) and each
    /// pass starts from the steady state of its first sample.
    pub fn filtfilt(&self, x: &[f64]) -> Vec<f64> {
        let n = x.len();
        if n < 2 {
            return vec![0.0; n];
        }
        let pad = ((self.sample_rate / self.cutoff).round() as usize).min(n - 1);
        let mut ext = Vec::with_capacity(n + 2 * pad);
        ext.extend((1..=pad).rev().map(|i| 2.0 * x[0] - x[i]));
        ext.extend_from_slice(x);
        ext.extend((1..=pad).map(|i| 2.0 * x[n - 1] - x[n - 1 - i]));

        let zi = self.step_initial_state();
        let scaled = |x0: f64| zi.iter().map(|z| [z[0] * x0, z[1] * x0]).collect::<Vec<_>>();
        let mut fwd = self.filter(&ext, Some(&scaled(ext[0])));
        fwd.reverse();
        let mut back = self.filter(&fwd, Some(&scaled(fwd[0])));
        back.reverse();
        back[pad..pad + n].to_vec()
    }
}

/// |H|² of an order-N digital Butterworth high-pass designed by the bilinear transform.
pub fn highpass_power_response(order: usize, cutoff: f64, sample_rate: f64, freq: f64) -> f64 {
    let wc = (PI * cutoff / sample_rate).tan();
    let w = (PI * freq / sample_rate).tan();
    if w == 0.0 {
        return 0.0;
    }
    1.0 / (1.0 + (wc / w).powi(2 * order as i32))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn magnitude_matches_closed_form() {
        let f = Butterworth::highpass(5, 0.05, 100.0);
        for freq in [0.005, 0.01, 0.02, 0.05, 0.1, 0.25, 1.0, 10.0, 49.0] {
            let h = f.response(freq).norm_sqr();
            let expected = highpass_power_response(5, 0.05, 100.0, freq);
            assert!(
                (h - expected).abs() < 1e-9 * expected.max(1e-12) + 1e-15,
                "{freq}: {h} vs {expected}"
            );
        }
        assert!((f.response(0.05).norm_sqr() - 0.5).abs() < 1e-9);
    }

    #[test]
    fn denominators_match_reference_design() {
        // scipy.signal.butter(5, 0.05, 'highpass', fs=100, output='sos') denominators
        let reference = [
            [1.0, -0.996863331833438, 0.0],
            [1.0, -1.9949198467784994, 0.9949296913538334],
            [1.0, -1.99805041522336, 0.9980602752474935],
        ];
        let f = Butterworth::highpass(5, 0.05, 100.0);
        for r in reference {
            assert!(
                f.sections
                    .iter()
                    .any(|s| s.a.iter().zip(r).all(|(x, y)| (x - y).abs() < 1e-10)),
                "missing section {r:?}"
            );
        }
    }

    #[test]
    fn filtfilt_applies_squared_magnitude_without_delay() {
        let f = Butterworth::highpass(5, 0.05, 100.0);
        for freq in [0.04, 0.05, 0.08, 0.25] {
            let n = 40_000;
            let x: Vec<f64> = (0..n).map(|i| (2.0 * PI * freq * i as f64 / 100.0).sin()).collect();
            let y = f.filtfilt(&x);
            let mid = n / 4..3 * n / 4;
            let num: f64 = mid.clone().map(|i| x[i] * y[i]).sum();
            let den: f64 = mid.clone().map(|i| x[i] * x[i]).sum();
            let gain = num / den;
            let expected = highpass_power_response(5, 0.05, 100.0, freq);
            assert!((gain - expected).abs() < 0.01, "{freq}: {gain} vs {expected}");
            // zero phase: residual orthogonal to the input
            let resid: f64 = mid.map(|i| (y[i] - gain * x[i]).powi(2)).sum::<f64>() / den;
            assert!(resid < 1e-4, "{freq}: {resid}");
        }
    }

    #[test]
    fn constant_input_is_removed() {
        let f = Butterworth::highpass(5, 0.05, 100.0);
        let y = f.filtfilt(&vec![3.0; 500]);
        assert!(y.iter().all(|v| v.abs() < 1e-9));
    }
}
