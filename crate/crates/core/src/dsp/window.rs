use std::f64::consts::PI;

/// Default Taylor parameters: four nearly constant sidelobes at −30 dB.
pub const TAYLOR_NBAR: usize = 4;
pub const TAYLOR_SLL_DB: f64 = 30.0;

/// Taylor window of length `m`, normalized so the center sample is 1.
pub fn taylor(m: usize, nbar: usize, sll_db: f64) -> Vec<f64> {
    if m == 0 {
        return Vec::new();
    }
    if m == 1 {
        return vec![1.0];
    }
    let b = 10f64.powf(sll_db / 20.0);
    let a = b.acosh() / PI;
    let s2 = (nbar * nbar) as f64 / (a * a + (nbar as f64 - 0.5).powi(2));
    let ma: Vec<f64> = (1..nbar).map(|i| i as f64).collect();
    let fm: Vec<f64> = ma
        .iter()
        .enumerate()
        .map(|(mi, &m_i)| {
            let m2 = m_i * m_i;
            let sign = if mi % 2 == 0 { 1.0 } else { -1.0 };
            let numer: f64 = sign
                * ma.iter()
                    .map(|&mj| 1.0 - m2 / s2 / (a * a + (mj - 0.5).powi(2)))
                    .product::<f64>();
            let denom: f64 = 2.0
                * ma.iter()
                    .enumerate()
                    .filter(|&(j, _)| j != mi)
                    .map(|(_, &mj)| 1.0 - m2 / (mj * mj))
                    .product::<f64>();
            numer / denom
        })
        .collect();
    let len = m as f64;
    let w = |n: f64| {
        1.0 + 2.0
            * ma.iter()
                .zip(&fm)
                .map(|(&mi, &f)| f * (2.0 * PI * mi * (n - len / 2.0 + 0.5) / len).cos())
                .sum::<f64>()
    };
    let scale = 1.0 / w((len - 1.0) / 2.0);
    (0..m).map(|n| w(n as f64) * scale).collect()
}

/// Taylor window with the default parameters.
pub fn taylor_default(m: usize) -> Vec<f64> {
    taylor(m, TAYLOR_NBAR, TAYLOR_SLL_DB)
}

#[cfg(test)]
mod tests {
    use super::*;

    // scipy.signal.windows.taylor(M, nbar=4, sll=30, norm=True)
    const REF_8: [f64; 8] = [
        0.2793462998238399,
        0.5149598981910933,
        0.7973015281194145,
        0.9756107180961113,
        0.9756107180961113,
        0.7973015281194145,
        0.5149598981910933,
        0.2793462998238399,
    ];
    const REF_13: [f64; 7] = [
        0.2570295156723465,
        0.3597703533112475,
        0.5262390517281011,
        0.7057636243609859,
        0.8596676195122276,
        0.9632598072895875,
        1.0,
    ];

    #[test]
    fn matches_reference_values() {
        let w = taylor_default(8);
        for (a, b) in w.iter().zip(REF_8) {
            assert!((a - b).abs() < 1e-12);
        }
        let w = taylor_default(13);
        for (a, b) in w.iter().zip(REF_13) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!((w[12] - REF_13[0]).abs() < 1e-12);
    }

    #[test]
    fn sidelobes_near_design_level() {
        use rustfft::{num_complex::Complex64, FftPlanner};
        let n = 64;
        let mut buf: Vec<Complex64> = taylor_default(n).into_iter().map(|x| Complex64::new(x, 0.0)).collect();
        buf.resize(n * 16, Complex64::new(0.0, 0.0));
        FftPlanner::new().plan_fft_forward(buf.len()).process(&mut buf);
        let mag: Vec<f64> = buf.iter().map(|c| c.norm()).collect();
        let peak = mag[0];
        // first null lies beyond the main lobe; scan the positive half past it
        let mut k = 1;
        while mag[k + 1] < mag[k] {
            k += 1;
        }
        let side = mag[k..buf.len() / 2].iter().cloned().fold(0.0, f64::max);
        let sll = 20.0 * (side / peak).log10();
        assert!(sll < -29.0 && sll > -32.0, "{sll}");
    }
}
