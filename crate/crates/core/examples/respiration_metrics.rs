//! Rate estimation and lagged correlation against a reference belt signal.

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rpsim::dsp::highpass;
use rpsim::metrics::{displacement_metrics, reference_cross_correlation, respiration_rate_default, LaggedCorrelation};
use rpsim::series::TimeSeries;

/// Returns the estimated rate and the correlation with the reference.
pub fn run_example() -> rpsim::Result<(f64, LaggedCorrelation)> {
    let rate = 100.0;
    let n = 6000;
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let noise = Normal::new(0.0, 0.2e-3).expect("valid deviation");
    // breathing with a slow drift, as the radar would see it
    let radar: Vec<f64> = (0..n)
        .map(|i| {
            let t = i as f64 / rate;
            2.5e-3 * (2.0 * PI * 0.27 * t).sin() + 1e-4 * t + noise.sample(&mut rng)
        })
        .collect();
    // the belt lags the chest wall by 0.4 s and has its own scale
    let belt: Vec<f64> = (0..n)
        .map(|i| 3.0 * (2.0 * PI * 0.27 * (i as f64 / rate - 0.4)).sin())
        .collect();

    let d = highpass(&TimeSeries::new(0.0, rate, radar));
    let h = highpass(&TimeSeries::new(0.0, rate, belt));
    let estimate = respiration_rate_default(&d)?;
    println!(
        "rate {:.4} Hz ({:.1} breaths/min), peak {:.1} dB over the band median",
        estimate.frequency,
        estimate.frequency * 60.0,
        estimate.peak_to_median_db
    );
    let lagged = reference_cross_correlation(&d, &h, 2.0)?;
    println!(
        "reference correlation {:.3} at a delay of {:+.2} s",
        lagged.rho, lagged.lag_s
    );
    let zero_lag = displacement_metrics(&d, &h, true)?;
    println!("without the delay search the correlation is {:.3}", zero_lag.rho);
    Ok((estimate.frequency, lagged))
}

#[allow(dead_code)]
fn main() -> rpsim::Result<()> {
    env_logger::init();
    run_example().map(|_| ())
}
