//! Statistical properties of the noise generator and the spectral estimators.

use kljn_core::signal::{
    estimate_psd, generate_band_limited_gaussian, mean_density_in_band, mean_square, NoiseSpec,
};
use proptest::prelude::*;

fn moments(x: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let m = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n;
    let m4 = x.iter().map(|v| (v - m).powi(4)).sum::<f64>() / n;
    (m, var, m4 / (var * var))
}

fn correlation(a: &[f64], b: &[f64]) -> f64 {
    let (ma, va, _) = moments(a);
    let (mb, vb, _) = moments(b);
    let cov = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum::<f64>() / a.len() as f64;
    cov / (va * vb).sqrt()
}

#[test]
fn variance_matches_parseval_at_bt_1e4() {
    let spec = NoiseSpec::white(1e-12, 1e4).unwrap();
    let dt = 1.0 / (4.0 * 1e4);
    let n = 40_000;
    let x = generate_band_limited_gaussian(&spec, n, dt, 1).unwrap();
    let v = mean_square(&x, 0..n).unwrap();
    assert!((v / 1e-8 - 1.0).abs() < 0.05, "{v}");
}

#[test]
fn samples_are_gaussian() {
    let spec = NoiseSpec::white(1.0, 1e3).unwrap();
    let x = generate_band_limited_gaussian(&spec, 200_000, 1.0 / 4e3, 5).unwrap();
    let (_, _, kurt) = moments(x.samples());
    assert!((kurt - 3.0).abs() < 0.1, "{kurt}");
}

#[test]
fn different_seeds_are_uncorrelated() {
    let spec = NoiseSpec::white(1.0, 1e3).unwrap();
    let a = generate_band_limited_gaussian(&spec, 200_000, 1.0 / 4e3, 11).unwrap();
    let b = generate_band_limited_gaussian(&spec, 200_000, 1.0 / 4e3, 12).unwrap();
    let rho = correlation(a.samples(), b.samples());
    assert!(rho.abs() < 0.01, "{rho}");
}

#[test]
fn decorrelated_after_one_correlation_time() {
    // lag 1/(2B) is two samples at dt = 1/(4B)
    let b = 1e3;
    let spec = NoiseSpec::white(1.0, b).unwrap();
    let n = 80_000; // B·T = 2e4
    let x = generate_band_limited_gaussian(&spec, n, 1.0 / (4.0 * b), 3).unwrap();
    let s = x.samples();
    let rho = correlation(&s[..n - 2], &s[2..]);
    assert!(rho.abs() < 0.05, "{rho}");
    // and strongly correlated within a tenth of it
    let y = generate_band_limited_gaussian(&spec, n, 1.0 / (40.0 * b), 3).unwrap();
    let s = y.samples();
    assert!(correlation(&s[..n - 2], &s[2..]) > 0.9);
}

#[test]
fn welch_round_trip_within_ten_percent() {
    let b = 1e4;
    let dt = 1.0 / (10.0 * b);
    let seg = 1024;
    let n = 64 * seg;
    let spec = NoiseSpec::white(1e-12, b).unwrap();
    let x = generate_band_limited_gaussian(&spec, n, dt, 8).unwrap();
    let psd = estimate_psd(&x, seg).unwrap();
    let df = 1.0 / (seg as f64 * dt);
    let m = mean_density_in_band(&psd, 2.0 * df, b - 2.0 * df).unwrap();
    assert!((m / 1e-12 - 1.0).abs() < 0.1, "{m}");
    // out of band the estimate falls by orders of magnitude
    let above = mean_density_in_band(&psd, 1.5 * b, 4.0 * b).unwrap();
    assert!(above < 1e-3 * m, "{above}");
}

#[test]
fn mean_square_within_five_percent_at_bt_1e3() {
    let b = 1e3;
    let spec = NoiseSpec::white(2e-10, b).unwrap();
    let n = 4_000; // n·dt·B = 1e3
    let x = generate_band_limited_gaussian(&spec, n, 1.0 / (4.0 * b), 21).unwrap();
    let v = mean_square(&x, 0..n).unwrap();
    assert!((v / spec.variance() - 1.0).abs() < 0.05, "{v}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn variance_tracks_spectrum(log_s in -20.0f64..0.0, log_b in 1.0f64..5.0, seed in any::<u64>(), over in 2.0f64..8.0) {
        let s = 10f64.powf(log_s);
        let b = 10f64.powf(log_b);
        let spec = NoiseSpec::white(s, b).unwrap();
        let dt = 1.0 / (over * b);
        let n = (1e4 * over).ceil() as usize;
        let x = generate_band_limited_gaussian(&spec, n, dt, seed).unwrap();
        let ratio = mean_square(&x, 0..n).unwrap() / (s * b);
        prop_assert!((0.95..=1.05).contains(&ratio), "ratio {}", ratio);
    }

    #[test]
    fn same_seed_same_samples(seed in any::<u64>(), n in 64usize..2048) {
        let spec = NoiseSpec::white(1.0, 100.0).unwrap();
        let dt = 1.0 / 400.0;
        prop_assume!(n as f64 * dt * 100.0 >= 1.0);
        let a = generate_band_limited_gaussian(&spec, n, dt, seed).unwrap();
        let b = generate_band_limited_gaussian(&spec, n, dt, seed).unwrap();
        prop_assert_eq!(a, b);
    }
}
