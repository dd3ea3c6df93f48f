//! Band-limited Johnson noise synthesis and the spectral estimators the
//! protocol and the attacks measure with.

use std::f64::consts::PI;
use std::ops::Range;

use rand_distr::{Distribution, StandardNormal};
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::stats::rng_from_seed;

/// Boltzmann constant, J/K.
pub const BOLTZMANN: f64 = 1.380649e-23;

/// Physical constants used by the Johnson formula.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalConstants {
    pub k: f64,
}

impl PhysicalConstants {
    pub const SI: PhysicalConstants = PhysicalConstants { k: BOLTZMANN };
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self::SI
    }
}

/// One-sided voltage noise spectral density `4kTR` of a resistor, V²/Hz.
pub fn johnson_spectral_density(temperature: f64, resistance: f64) -> Result<f64> {
    if !(temperature >= 0.0) || !(resistance >= 0.0) {
        return Err(Error::invalid(format!(
            "Johnson density needs T >= 0 and R >= 0, got T = {temperature}, R = {resistance}"
        )));
    }
    Ok(4.0 * BOLTZMANN * temperature * resistance)
}

/// Band-limited white Gaussian noise: flat one-sided density on `[0, B]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    spectral_density: f64,
    bandwidth: f64,
    temperature: Option<f64>,
    resistance: Option<f64>,
}

impl NoiseSpec {
    pub fn white(spectral_density: f64, bandwidth: f64) -> Result<Self> {
        if !(spectral_density >= 0.0) || !spectral_density.is_finite() {
            return Err(Error::invalid(format!(
                "spectral density must be finite and >= 0, got {spectral_density}"
            )));
        }
        if !(bandwidth > 0.0) || !bandwidth.is_finite() {
            return Err(Error::invalid(format!("bandwidth must be > 0, got {bandwidth}")));
        }
        Ok(NoiseSpec {
            spectral_density,
            bandwidth,
            temperature: None,
            resistance: None,
        })
    }

    /// Noise of a resistor `R` at effective temperature `T`, so `S = 4kTR`.
    pub fn johnson(temperature: f64, resistance: f64, bandwidth: f64) -> Result<Self> {
        let s = johnson_spectral_density(temperature, resistance)?;
        let mut spec = NoiseSpec::white(s, bandwidth)?;
        spec.temperature = Some(temperature);
        spec.resistance = Some(resistance);
        Ok(spec)
    }

    pub fn spectral_density(&self) -> f64 {
        self.spectral_density
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    pub fn temperature(&self) -> Option<f64> {
        self.temperature
    }

    pub fn resistance(&self) -> Option<f64> {
        self.resistance
    }

    /// Total variance `S·B` of the band-limited process.
    pub fn variance(&self) -> f64 {
        self.spectral_density * self.bandwidth
    }

    pub fn correlation_time(&self) -> f64 {
        0.5 / self.bandwidth
    }
}

/// Correlation time of ideal band-limited noise, taken as the first zero of
/// its sinc autocorrelation: `1/(2B)`.
pub fn correlation_time(spec: &NoiseSpec) -> f64 {
    spec.correlation_time()
}

pub fn correlation_time_for_bandwidth(bandwidth: f64) -> Result<f64> {
    if !(bandwidth > 0.0) {
        return Err(Error::invalid(format!("bandwidth must be > 0, got {bandwidth}")));
    }
    Ok(0.5 / bandwidth)
}

/// Uniformly sampled real signal.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledSignal {
    samples: Vec<f64>,
    dt: f64,
}

impl SampledSignal {
    pub fn new(samples: Vec<f64>, dt: f64) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::invalid(format!("sample interval must be > 0, got {dt}")));
        }
        if samples.is_empty() {
            return Err(Error::EmptySignal);
        }
        Ok(SampledSignal { samples, dt })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 * self.dt
    }

    /// Linear interpolation between samples; holds the end values outside
    /// the sampled span.
    pub fn value_at(&self, t: f64) -> f64 {
        let x = t / self.dt;
        if x <= 0.0 {
            return self.samples[0];
        }
        let i = x.floor() as usize;
        if i + 1 >= self.samples.len() {
            return *self.samples.last().unwrap();
        }
        let frac = x - i as f64;
        self.samples[i] * (1.0 - frac) + self.samples[i + 1] * frac
    }

    pub fn scaled(&self, factor: f64) -> SampledSignal {
        SampledSignal {
            samples: self.samples.iter().map(|x| x * factor).collect(),
            dt: self.dt,
        }
    }
}

/// Synthesises `n` samples of zero-mean Gaussian noise with a flat one-sided
/// density `S` on `[0, B]` and nothing above `B`.
///
/// Independent complex Gaussian coefficients are placed on the in-band bins
/// of an `m = n.next_power_of_two()` point spectrum and inverse transformed;
/// the first `n` samples are returned. Identical arguments give bit-identical
/// output.
pub fn generate_band_limited_gaussian(
    spec: &NoiseSpec,
    n: usize,
    dt: f64,
    seed: u64,
) -> Result<SampledSignal> {
    let bandwidth = spec.bandwidth();
    if !(dt > 0.0) {
        return Err(Error::invalid(format!("sample interval must be > 0, got {dt}")));
    }
    if dt * 2.0 * bandwidth > 1.0 + 1e-9 {
        return Err(Error::NyquistViolation { dt, bandwidth });
    }
    if n == 0 {
        return Err(Error::EmptySignal);
    }
    if (n as f64) * dt * bandwidth < 1.0 {
        return Err(Error::invalid(format!(
            "record too short: n·dt·B = {} < 1",
            n as f64 * dt * bandwidth
        )));
    }
    if spec.spectral_density() == 0.0 {
        return SampledSignal::new(vec![0.0; n], dt);
    }

    let m = n.next_power_of_two().max(2);
    let df = 1.0 / (m as f64 * dt);
    // two-sided power per bin: S/2 · df
    let sigma = (spec.spectral_density() * df / 4.0).sqrt();
    let sigma_real_bin = (spec.spectral_density() * df / 2.0).sqrt();

    let mut rng = rng_from_seed(seed);
    let mut spectrum = vec![Complex::new(0.0, 0.0); m];
    let half = m / 2;
    for k in 0..=half {
        let f = k as f64 * df;
        if f > bandwidth * (1.0 + 1e-12) {
            break;
        }
        if k == 0 || k == half {
            let a: f64 = StandardNormal.sample(&mut rng);
            spectrum[k] = Complex::new(a * sigma_real_bin, 0.0);
        } else {
            let a: f64 = StandardNormal.sample(&mut rng);
            let b: f64 = StandardNormal.sample(&mut rng);
            let c = Complex::new(a * sigma, b * sigma);
            spectrum[k] = c;
            spectrum[m - k] = c.conj();
        }
    }

    let mut planner = FftPlanner::<f64>::new();
    planner.plan_fft_inverse(m).process(&mut spectrum);
    let samples = spectrum.iter().take(n).map(|c| c.re).collect();
    SampledSignal::new(samples, dt)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WindowKind {
    Hann,
    Rectangular,
}

impl WindowKind {
    fn coefficients(self, n: usize) -> Vec<f64> {
        match self {
            WindowKind::Rectangular => vec![1.0; n],
            WindowKind::Hann => (0..n)
                .map(|i| 0.5 * (1.0 - (2.0 * PI * i as f64 / n as f64).cos()))
                .collect(),
        }
    }
}

/// Welch averaged-periodogram settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WelchConfig {
    pub segment_len: usize,
    /// Fraction of a segment shared with its neighbour, in `[0, 1)`.
    pub overlap: f64,
    pub window: WindowKind,
}

impl WelchConfig {
    pub fn new(segment_len: usize) -> Self {
        WelchConfig {
            segment_len,
            overlap: 0.5,
            window: WindowKind::Hann,
        }
    }
}

/// One-sided power spectral density estimate with Hann windows and 50%
/// overlap. Returns `(frequency, density)` pairs for bins `0..=N/2`.
pub fn estimate_psd(signal: &SampledSignal, segment_len: usize) -> Result<Vec<(f64, f64)>> {
    estimate_psd_with(signal, &WelchConfig::new(segment_len))
}

pub fn estimate_psd_with(signal: &SampledSignal, config: &WelchConfig) -> Result<Vec<(f64, f64)>> {
    let x = signal.samples();
    let n = config.segment_len;
    if x.is_empty() {
        return Err(Error::EmptySignal);
    }
    if n < 2 || !n.is_power_of_two() {
        return Err(Error::invalid(format!("segment length must be a power of two >= 2, got {n}")));
    }
    if n > x.len() {
        return Err(Error::invalid(format!(
            "segment length {n} exceeds signal length {}",
            x.len()
        )));
    }
    if !(0.0..1.0).contains(&config.overlap) {
        return Err(Error::invalid(format!("overlap must lie in [0, 1), got {}", config.overlap)));
    }

    let window = config.window.coefficients(n);
    let window_power: f64 = window.iter().map(|w| w * w).sum();
    let step = ((n as f64) * (1.0 - config.overlap)).round().max(1.0) as usize;
    let fs = 1.0 / signal.dt();
    let fft = FftPlanner::<f64>::new().plan_fft_forward(n);

    let bins = n / 2 + 1;
    let mut acc = vec![0.0; bins];
    let mut buf = vec![Complex::new(0.0, 0.0); n];
    let mut segments = 0usize;
    let mut start = 0usize;
    while start + n <= x.len() {
        for (slot, (&v, &w)) in buf.iter_mut().zip(x[start..start + n].iter().zip(&window)) {
            *slot = Complex::new(v * w, 0.0);
        }
        fft.process(&mut buf);
        for (k, a) in acc.iter_mut().enumerate() {
            *a += buf[k].norm_sqr();
        }
        segments += 1;
        start += step;
    }

    let scale = 1.0 / (fs * window_power * segments as f64);
    Ok(acc
        .iter()
        .enumerate()
        .map(|(k, &p)| {
            let one_sided = if k == 0 || k == n / 2 { 1.0 } else { 2.0 };
            (k as f64 * fs / n as f64, p * scale * one_sided)
        })
        .collect())
}

/// Mean density over the bins with `f_lo <= f <= f_hi`.
pub fn mean_density_in_band(psd: &[(f64, f64)], f_lo: f64, f_hi: f64) -> Result<f64> {
    let (sum, count) = psd
        .iter()
        .filter(|(f, _)| *f >= f_lo && *f <= f_hi)
        .fold((0.0, 0usize), |(s, c), (_, d)| (s + d, c + 1));
    if count == 0 {
        return Err(Error::InsufficientData(format!(
            "no spectral bins between {f_lo} and {f_hi} Hz"
        )));
    }
    Ok(sum / count as f64)
}

/// Arithmetic mean of squared samples over `window`.
pub fn mean_square(signal: &SampledSignal, window: Range<usize>) -> Result<f64> {
    mean_square_slice(signal.samples(), window)
}

pub(crate) fn mean_square_slice(x: &[f64], window: Range<usize>) -> Result<f64> {
    if window.start >= window.end {
        return Err(Error::BadWindow(format!("{window:?} is empty")));
    }
    if window.end > x.len() {
        return Err(Error::BadWindow(format!(
            "{window:?} exceeds signal length {}",
            x.len()
        )));
    }
    let len = window.len() as f64;
    Ok(x[window].iter().map(|v| v * v).sum::<f64>() / len)
}
