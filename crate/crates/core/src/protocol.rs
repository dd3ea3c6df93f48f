//! KLJN and RRRT–KLJN bit exchange.
//!
//! A period starts with both parties switching their resistor and noise
//! generator onto the wire. The first part of the period is integrated with
//! a fine step so the switching transient is resolved; the rest uses a
//! coarse step that only has to resolve the noise band. Both parties read
//! the same simulated trace.

use std::fmt;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::circuit::{
    analytic_loop_spectra, simulate_span, CableModel, CircuitState, LoopConfig, Source, SwitchingEnvelope,
    Trace,
};
use crate::error::{Error, Result};
use crate::signal::{
    estimate_psd, generate_band_limited_gaussian, mean_density_in_band, NoiseSpec, SampledSignal, BOLTZMANN,
};
use crate::stats::{derive_seed, rng_from_seed, stream, wilson95};

/// Periods per independently seeded exchange when many periods are run in
/// parallel. Fixed so results never depend on the thread count.
pub const CHAIN_LEN: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Bit {
    L,
    H,
}

impl Bit {
    pub fn random(rng: &mut impl Rng) -> Bit {
        if rng.random::<bool>() {
            Bit::H
        } else {
            Bit::L
        }
    }

    pub fn flip(self) -> Bit {
        match self {
            Bit::L => Bit::H,
            Bit::H => Bit::L,
        }
    }

    /// L ↔ 0, H ↔ 1.
    pub fn as_u8(self) -> u8 {
        match self {
            Bit::L => 0,
            Bit::H => 1,
        }
    }
}

impl fmt::Display for Bit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Bit::L => "L",
            Bit::H => "H",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PairClass {
    LL,
    LH,
    HL,
    HH,
}

impl PairClass {
    pub fn of(alice: Bit, bob: Bit) -> PairClass {
        match (alice, bob) {
            (Bit::L, Bit::L) => PairClass::LL,
            (Bit::L, Bit::H) => PairClass::LH,
            (Bit::H, Bit::L) => PairClass::HL,
            (Bit::H, Bit::H) => PairClass::HH,
        }
    }

    pub fn is_secure(self) -> bool {
        matches!(self, PairClass::LH | PairClass::HL)
    }
}

impl fmt::Display for PairClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SwitchingMode {
    Abrupt,
    /// Both parties ramp their generator amplitude linearly over `ramp_time`.
    SymmetricRamp { ramp_time: f64 },
}

impl SwitchingMode {
    pub fn envelope(self) -> SwitchingEnvelope {
        match self {
            SwitchingMode::Abrupt => SwitchingEnvelope::Abrupt,
            SwitchingMode::SymmetricRamp { ramp_time } => SwitchingEnvelope::Ramp { ramp_time },
        }
    }
}

/// How the parties turn a period into spectra.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Estimator {
    /// Welch estimates from the simulated trace.
    Simulated,
    /// Exact ideal-wire spectra; no statistical error.
    Analytic,
}

/// Integration resolution, expressed relative to the noise bandwidth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Resolution {
    /// Samples per `1/B` in the bulk of the period.
    pub steady_per_bandwidth: f64,
    /// Samples per `1/B` while the switching transient is resolved.
    pub transient_per_bandwidth: f64,
    /// Length of the finely resolved stretch, in correlation times `1/(2B)`.
    pub transient_span: f64,
}

impl Default for Resolution {
    fn default() -> Self {
        Resolution {
            steady_per_bandwidth: 100.0,
            transient_per_bandwidth: 2000.0,
            transient_span: 2.0,
        }
    }
}

impl Resolution {
    fn validate(&self) -> Result<()> {
        if !(self.steady_per_bandwidth >= 2.0) || !(self.transient_per_bandwidth >= 2.0) {
            return Err(Error::invalid("resolution must sample at least at the Nyquist rate"));
        }
        if !(self.transient_span > 0.0) {
            return Err(Error::invalid("transient span must be > 0"));
        }
        let ratio = self.transient_per_bandwidth / self.steady_per_bandwidth;
        if !(ratio >= 1.0) || (ratio - ratio.round()).abs() > 1e-9 {
            return Err(Error::invalid(
                "transient_per_bandwidth must be an integer multiple of steady_per_bandwidth",
            ));
        }
        Ok(())
    }
}

/// Plain KLJN configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct KljnParams {
    pub r_low: f64,
    pub r_high: f64,
    /// Effective noise temperature shared by both parties, K.
    pub temperature: f64,
    pub bandwidth: f64,
    pub bit_period: f64,
    pub switching: SwitchingMode,
    pub cable: CableModel,
    pub resolution: Resolution,
    pub estimator: Estimator,
    /// Keep the cable charge from one period to the next. When false every
    /// period starts from a discharged cable.
    pub carry_over: bool,
}

impl KljnParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.r_low > 0.0 && self.r_low < self.r_high) || !self.r_high.is_finite() {
            return Err(Error::invalid(format!(
                "need 0 < R_L < R_H, got R_L = {}, R_H = {}",
                self.r_low, self.r_high
            )));
        }
        if !(self.temperature > 0.0) {
            return Err(Error::invalid("temperature must be > 0"));
        }
        if !(self.bandwidth > 0.0) {
            return Err(Error::invalid("bandwidth must be > 0"));
        }
        if !(self.bit_period * self.bandwidth >= 100.0) {
            return Err(Error::invalid(format!(
                "bit_period·B must be >= 100, got {}",
                self.bit_period * self.bandwidth
            )));
        }
        if let SwitchingMode::SymmetricRamp { ramp_time } = self.switching {
            if !(ramp_time > 0.0 && ramp_time < self.bit_period) {
                return Err(Error::invalid(format!(
                    "ramp_time must lie in (0, bit_period), got {ramp_time}"
                )));
            }
        }
        self.cable.validate()?;
        self.resolution.validate()
    }

    pub fn resistance(&self, bit: Bit) -> f64 {
        match bit {
            Bit::L => self.r_low,
            Bit::H => self.r_high,
        }
    }

    fn timing(&self) -> Timing {
        Timing::new(self.bandwidth, self.bit_period, &self.resolution)
    }
}

/// Draw rule for the RRRT resistor/temperature pairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RrrtDraw {
    /// `R` and `T` independent, each log-uniform on its range.
    LogUniform,
    /// `R` log-uniform; `T = X·R/sqrt(R_min·R_max)` with `X` log-uniform on
    /// `[T_min, T_max]`. The switching-transient signature `sqrt(T/R)` is then
    /// independent of `R`.
    TransientMatched,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RrrtParams {
    pub r_min: f64,
    pub r_max: f64,
    pub t_min: f64,
    pub t_max: f64,
    pub draw: RrrtDraw,
    /// Relative resistance difference below which a party discards the period.
    pub resolution_threshold: f64,
    pub bandwidth: f64,
    pub bit_period: f64,
    pub switching: SwitchingMode,
    pub cable: CableModel,
    pub resolution: Resolution,
    pub estimator: Estimator,
}

impl RrrtParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.r_min > 0.0 && self.r_min < self.r_max) || !self.r_max.is_finite() {
            return Err(Error::invalid("need 0 < R_min < R_max"));
        }
        if !(self.t_min > 0.0 && self.t_min < self.t_max) || !self.t_max.is_finite() {
            return Err(Error::invalid("need 0 < T_min < T_max"));
        }
        if !(self.resolution_threshold > 0.0 && self.resolution_threshold < 0.5) {
            return Err(Error::invalid("resolution_threshold must lie in (0, 0.5)"));
        }
        if !(self.bandwidth > 0.0) {
            return Err(Error::invalid("bandwidth must be > 0"));
        }
        if !(self.bit_period * self.bandwidth >= 100.0) {
            return Err(Error::invalid("bit_period·B must be >= 100"));
        }
        if let SwitchingMode::SymmetricRamp { ramp_time } = self.switching {
            if !(ramp_time > 0.0 && ramp_time < self.bit_period) {
                return Err(Error::invalid("ramp_time must lie in (0, bit_period)"));
            }
        }
        self.cable.validate()?;
        self.resolution.validate()
    }

    /// Draws one party's `(R, T)`.
    pub fn draw_party(&self, rng: &mut impl Rng) -> (f64, f64) {
        let r = log_uniform(rng, self.r_min, self.r_max);
        let x = log_uniform(rng, self.t_min, self.t_max);
        let t = match self.draw {
            RrrtDraw::LogUniform => x,
            RrrtDraw::TransientMatched => x * r / (self.r_min * self.r_max).sqrt(),
        };
        (r, t)
    }

    fn timing(&self) -> Timing {
        Timing::new(self.bandwidth, self.bit_period, &self.resolution)
    }
}

fn log_uniform(rng: &mut impl Rng, lo: f64, hi: f64) -> f64 {
    let u: f64 = rng.random();
    (lo.ln() + u * (hi.ln() - lo.ln())).exp()
}

#[derive(Debug, Clone, Copy)]
struct Timing {
    bandwidth: f64,
    bit_period: f64,
    dt_steady: f64,
    dt_transient: f64,
    transient_len: f64,
}

impl Timing {
    fn new(bandwidth: f64, bit_period: f64, res: &Resolution) -> Self {
        let dt_transient = 1.0 / (res.transient_per_bandwidth * bandwidth);
        let dt_steady = 1.0 / (res.steady_per_bandwidth * bandwidth);
        let span = (res.transient_span * 0.5 / bandwidth).min(bit_period);
        // whole number of coarse steps, so the fine stretch decimates onto
        // the coarse grid
        let transient_len = (span / dt_steady).round().max(1.0) * dt_steady;
        Timing {
            bandwidth,
            bit_period,
            dt_steady,
            dt_transient,
            transient_len,
        }
    }
}

/// The two differently resolved parts of one period.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodTrace {
    /// Finely sampled stretch starting at the switching instant.
    pub transient: Trace,
    /// Remainder of the period; empty when only the transient was simulated.
    pub steady: Trace,
}

impl PeriodTrace {
    /// The whole period on the coarse grid: the fine stretch decimated,
    /// followed by the steady part.
    pub fn coarse(&self) -> Trace {
        let k = (self.steady.dt / self.transient.dt).round().max(1.0) as usize;
        let fine_len = self.transient.len().saturating_sub(1);
        let pick = |fine: &[f64], rest: &[f64]| -> Vec<f64> {
            let mut v: Vec<f64> = fine[..fine_len].iter().step_by(k).copied().collect();
            v.extend_from_slice(rest);
            v
        };
        Trace {
            dt: self.steady.dt,
            t0: self.transient.t0,
            taps: self.transient.taps.clone(),
            voltages: self
                .transient
                .voltages
                .iter()
                .zip(&self.steady.voltages)
                .map(|(f, r)| pick(f, r))
                .collect(),
            entry_current: pick(&self.transient.entry_current, &self.steady.entry_current),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeriodOutcome {
    pub alice_bit: Bit,
    pub bob_bit: Bit,
    pub pair_class: PairClass,
    pub kept: bool,
    /// Alice's inference of Bob's bit.
    pub alice_decision: Bit,
    /// Bob's inference of Alice's bit.
    pub bob_decision: Bit,
    pub error: bool,
}

/// Resistor and temperature each party used in a period.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PartyDraws {
    pub r_a: f64,
    pub t_a: f64,
    pub r_b: f64,
    pub t_b: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PeriodRun {
    pub trace: PeriodTrace,
    pub outcome: PeriodOutcome,
    pub state: CircuitState,
    pub draws: PartyDraws,
}

/// Which part of a period to integrate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Extent {
    Full,
    TransientOnly,
}

#[allow(clippy::too_many_arguments)]
fn simulate_loop(
    timing: &Timing,
    cable: &CableModel,
    switching: SwitchingMode,
    draws: &PartyDraws,
    seed: u64,
    prev: &CircuitState,
    extent: Extent,
) -> Result<(PeriodTrace, CircuitState)> {
    let b = timing.bandwidth;
    let horizon = match extent {
        Extent::Full => timing.bit_period,
        Extent::TransientOnly => timing.transient_len,
    };
    let n_src = (horizon / timing.dt_steady).ceil() as usize + 2;
    let n_src = n_src.max((1.0 / (timing.dt_steady * b)).ceil() as usize);
    let unit = NoiseSpec::white(1.0, b)?;
    let seed_a = derive_seed(seed, stream::NOISE_A, 0);
    let seed_b = derive_seed(seed, stream::NOISE_B, 0);
    let base_a = generate_band_limited_gaussian(&unit, n_src, timing.dt_steady, seed_a)?;
    let base_b = generate_band_limited_gaussian(&unit, n_src, timing.dt_steady, seed_b)?;
    let amp = |t: f64, r: f64| (4.0 * BOLTZMANN * t * r).sqrt();
    let config = LoopConfig {
        r_a: draws.r_a,
        r_b: draws.r_b,
        source_a: Source::Sampled(base_a.scaled(amp(draws.t_a, draws.r_a))),
        source_b: Source::Sampled(base_b.scaled(amp(draws.t_b, draws.r_b))),
        cable: cable.clone(),
        envelope_a: switching.envelope(),
        envelope_b: switching.envelope(),
    };

    let (transient, mid) = simulate_span(&config, 0.0, timing.transient_len, timing.dt_transient, prev)?;
    let (steady, end) = match extent {
        Extent::Full => simulate_span(
            &config,
            timing.transient_len,
            (timing.bit_period - timing.transient_len).max(0.0),
            timing.dt_steady,
            &mid,
        )?,
        Extent::TransientOnly => (
            Trace {
                dt: timing.dt_steady,
                t0: timing.transient_len,
                taps: transient.taps.clone(),
                voltages: vec![Vec::new(); transient.taps.len()],
                entry_current: Vec::new(),
            },
            mid,
        ),
    };
    Ok((PeriodTrace { transient, steady }, end))
}

/// Runs one KLJN period with uniformly drawn bits.
pub fn run_kljn_period(params: &KljnParams, seed: u64, prev_state: &CircuitState) -> Result<PeriodRun> {
    let mut rng = rng_from_seed(derive_seed(seed, stream::BITS, 0));
    let alice = Bit::random(&mut rng);
    let bob = Bit::random(&mut rng);
    run_kljn_period_with_bits(params, seed, prev_state, alice, bob)
}

/// Runs one KLJN period with the given bits.
pub fn run_kljn_period_with_bits(
    params: &KljnParams,
    seed: u64,
    prev_state: &CircuitState,
    alice: Bit,
    bob: Bit,
) -> Result<PeriodRun> {
    kljn_period(params, seed, prev_state, alice, bob, Extent::Full)
}

pub(crate) fn kljn_period(
    params: &KljnParams,
    seed: u64,
    prev_state: &CircuitState,
    alice: Bit,
    bob: Bit,
    extent: Extent,
) -> Result<PeriodRun> {
    params.validate()?;
    let draws = PartyDraws {
        r_a: params.resistance(alice),
        t_a: params.temperature,
        r_b: params.resistance(bob),
        t_b: params.temperature,
    };
    let timing = params.timing();
    let (trace, state) = simulate_loop(&timing, &params.cable, params.switching, &draws, seed, prev_state, extent)?;

    let pair_class = PairClass::of(alice, bob);
    let (alice_decision, bob_decision) = match extent {
        Extent::TransientOnly => (bob, alice),
        Extent::Full => {
            let r_loop = match params.estimator {
                Estimator::Simulated => {
                    measure_loop_resistance(&trace.coarse(), params.temperature, params.bandwidth)?
                }
                Estimator::Analytic => {
                    let s = analytic_loop_spectra(draws.r_a, draws.t_a, draws.r_b, draws.t_b)?;
                    4.0 * BOLTZMANN * params.temperature / s.s_i
                }
            };
            (
                decide_bit(r_loop, draws.r_a, params)?.remote,
                decide_bit(r_loop, draws.r_b, params)?.remote,
            )
        }
    };
    let kept = pair_class.is_secure();
    let error = kept && (alice_decision != bob || bob_decision != alice);
    Ok(PeriodRun {
        trace,
        outcome: PeriodOutcome {
            alice_bit: alice,
            bob_bit: bob,
            pair_class,
            kept,
            alice_decision,
            bob_decision,
            error,
        },
        state,
        draws,
    })
}

fn in_band_limits(signal: &SampledSignal, bandwidth: f64) -> Result<(Vec<(f64, f64)>, f64, f64)> {
    let len = signal.len();
    let fs = 1.0 / signal.dt();
    let by_length = prev_power_of_two(len / 8).max(2);
    let by_resolution = ((32.0 * fs / bandwidth).ceil() as usize).next_power_of_two();
    let seg = by_length.min(by_resolution);
    let psd = estimate_psd(signal, seg)?;
    let df = fs / seg as f64;
    Ok((psd, 2.0 * df, bandwidth - 2.0 * df))
}

fn prev_power_of_two(n: usize) -> usize {
    if n == 0 {
        0
    } else {
        1 << (usize::BITS - 1 - n.leading_zeros())
    }
}

/// Mean in-band spectral density of a band-limited record. Bins within two
/// bin widths of DC or of the band edge are excluded to avoid window leakage.
pub fn mean_in_band_density(signal: &SampledSignal, bandwidth: f64) -> Result<f64> {
    if !(signal.len() as f64 * signal.dt() * bandwidth >= 100.0) {
        return Err(Error::InsufficientData(format!(
            "record length·dt·B = {} < 100",
            signal.len() as f64 * signal.dt() * bandwidth
        )));
    }
    let (psd, lo, hi) = in_band_limits(signal, bandwidth)?;
    mean_density_in_band(&psd, lo, hi)
}

/// Loop resistance from the Johnson formula, `4kT / S_i`, with `S_i` the mean
/// in-band density of the loop current.
pub fn measure_loop_resistance(trace: &Trace, temperature: f64, bandwidth: f64) -> Result<f64> {
    let s_i = mean_in_band_density(&trace.current_signal()?, bandwidth)?;
    if !(s_i > 0.0) {
        return Err(Error::EstimationFailure("measured current density is zero".into()));
    }
    Ok(4.0 * BOLTZMANN * temperature / s_i)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BitDecision {
    /// Inferred bit at the other end.
    pub remote: Bit,
    /// False for LL/HH, which must be discarded.
    pub keep: bool,
}

/// Subtracts the party's own resistance from the loop estimate and classifies
/// the remainder to the nearest of `R_L`, `R_H`. The midpoint goes to L.
pub fn decide_bit(r_loop_est: f64, own_r: f64, params: &KljnParams) -> Result<BitDecision> {
    if !(r_loop_est > 0.0) || !r_loop_est.is_finite() {
        return Err(Error::EstimationFailure(format!(
            "loop resistance estimate {r_loop_est} is not positive"
        )));
    }
    let own = if own_r == params.r_low {
        Bit::L
    } else if own_r == params.r_high {
        Bit::H
    } else {
        return Err(Error::invalid(format!("own resistance {own_r} is neither R_L nor R_H")));
    };
    let remote_est = r_loop_est - own_r;
    let midpoint = 0.5 * (params.r_low + params.r_high);
    let remote = if remote_est > midpoint { Bit::H } else { Bit::L };
    Ok(BitDecision {
        remote,
        keep: remote != own,
    })
}

/// Recovers the remote `(R, T)` from measured wire spectra and the party's own
/// `(R, T)`.
///
/// With `a = T_own·R_own` the ideal-wire spectra give
/// `S_u − R_own²·S_i = 4k·a·(R_rem − R_own)/(R_own + R_rem)`, which is linear
/// in `R_rem`; the remote temperature then follows from `S_i`.
pub fn solve_remote_parameters(s_u: f64, s_i: f64, own_r: f64, own_t: f64) -> Result<(f64, f64)> {
    if !(s_u > 0.0 && s_i > 0.0 && own_r > 0.0 && own_t > 0.0) {
        return Err(Error::invalid("remote parameter inversion needs positive inputs"));
    }
    let a = own_t * own_r;
    let d = (s_u - own_r * own_r * s_i) / (4.0 * BOLTZMANN * a);
    if !(d.abs() < 1.0) {
        return Err(Error::EstimationFailure(format!(
            "non-physical spectra: normalised difference {d} outside (-1, 1)"
        )));
    }
    let r_rem = own_r * (1.0 + d) / (1.0 - d);
    let sum = own_r + r_rem;
    let b = s_i * sum * sum / (4.0 * BOLTZMANN) - a;
    if !(b > 0.0) {
        return Err(Error::EstimationFailure(format!(
            "non-physical spectra: remote noise power {b} <= 0"
        )));
    }
    Ok((r_rem, b / r_rem))
}

fn relative_difference(x: f64, y: f64) -> f64 {
    (x - y).abs() / x.max(y)
}

/// Runs one RRRT period from a discharged cable.
pub fn run_rrrt_period(params: &RrrtParams, seed: u64, cable: &CableModel) -> Result<PeriodRun> {
    rrrt_period(params, seed, cable, None, Extent::Full)
}

/// RRRT period with the parties' `(R, T)` forced.
pub fn run_rrrt_period_with_draws(
    params: &RrrtParams,
    seed: u64,
    cable: &CableModel,
    draws: PartyDraws,
) -> Result<PeriodRun> {
    rrrt_period(params, seed, cable, Some(draws), Extent::Full)
}

pub(crate) fn rrrt_period(
    params: &RrrtParams,
    seed: u64,
    cable: &CableModel,
    forced: Option<PartyDraws>,
    extent: Extent,
) -> Result<PeriodRun> {
    params.validate()?;
    cable.validate()?;
    let draws = forced.unwrap_or_else(|| {
        let mut rng: ChaCha8Rng = rng_from_seed(derive_seed(seed, stream::BITS, 0));
        let (r_a, t_a) = params.draw_party(&mut rng);
        let (r_b, t_b) = params.draw_party(&mut rng);
        PartyDraws { r_a, t_a, r_b, t_b }
    });
    let timing = params.timing();
    let (trace, state) = simulate_loop(
        &timing,
        cable,
        params.switching,
        &draws,
        seed,
        &CircuitState::zeros(cable),
        extent,
    )?;

    // true bits: the party with the higher resistance holds H
    let (alice_bit, bob_bit) = if draws.r_a > draws.r_b {
        (Bit::H, Bit::L)
    } else if draws.r_a < draws.r_b {
        (Bit::L, Bit::H)
    } else {
        (Bit::L, Bit::L)
    };
    let tie = draws.r_a == draws.r_b;
    let truly_resolvable = relative_difference(draws.r_a, draws.r_b) >= params.resolution_threshold;

    let (alice_decision, bob_decision, kept) = match extent {
        Extent::TransientOnly => (bob_bit, alice_bit, !tie && truly_resolvable),
        Extent::Full => {
            let spectra = match params.estimator {
                Estimator::Simulated => {
                    let whole = trace.coarse();
                    let s_u = mean_in_band_density(&whole.voltage_signal(0)?, params.bandwidth)?;
                    let s_i = mean_in_band_density(&whole.current_signal()?, params.bandwidth)?;
                    (s_u, s_i)
                }
                Estimator::Analytic => {
                    let s = analytic_loop_spectra(draws.r_a, draws.t_a, draws.r_b, draws.t_b)?;
                    (s.s_u, s.s_i)
                }
            };
            let alice_view = party_view(spectra, draws.r_a, draws.t_a, params.resolution_threshold)?;
            let bob_view = party_view(spectra, draws.r_b, draws.t_b, params.resolution_threshold)?;
            match (alice_view, bob_view) {
                (Some(alice_is_high), Some(bob_is_high)) if !tie => {
                    // each party infers the other's bit as the complement of its own
                    let alice_dec = if alice_is_high { Bit::L } else { Bit::H };
                    let bob_dec = if bob_is_high { Bit::L } else { Bit::H };
                    (alice_dec, bob_dec, true)
                }
                _ => (bob_bit, alice_bit, false),
            }
        }
    };
    let error = kept && (alice_decision != bob_bit || bob_decision != alice_bit);
    Ok(PeriodRun {
        trace,
        outcome: PeriodOutcome {
            alice_bit,
            bob_bit,
            pair_class: PairClass::of(alice_bit, bob_bit),
            kept,
            alice_decision,
            bob_decision,
            error,
        },
        state,
        draws,
    })
}

/// `Some(own resistance is the higher)` or `None` when the party discards.
fn party_view(spectra: (f64, f64), own_r: f64, own_t: f64, threshold: f64) -> Result<Option<bool>> {
    match solve_remote_parameters(spectra.0, spectra.1, own_r, own_t) {
        Ok((r_rem, _)) if relative_difference(own_r, r_rem) >= threshold => Ok(Some(own_r > r_rem)),
        Ok(_) => Ok(None),
        Err(Error::EstimationFailure(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolStats {
    pub n_periods: usize,
    pub n_kept: usize,
    pub n_errors: usize,
    /// Alice–Bob bit error probability over kept periods.
    pub q: f64,
    pub q_ci95: (f64, f64),
    /// Alice's key bits, one per kept period.
    pub key: Vec<Bit>,
    pub outcomes: Vec<PeriodOutcome>,
}

impl ProtocolStats {
    pub fn from_outcomes(outcomes: Vec<PeriodOutcome>) -> Result<Self> {
        let n_kept = outcomes.iter().filter(|o| o.kept).count();
        let n_errors = outcomes.iter().filter(|o| o.error).count();
        let (q, q_ci95) = if n_kept == 0 {
            (0.0, (0.0, 1.0))
        } else {
            (
                n_errors as f64 / n_kept as f64,
                wilson95(n_errors as u64, n_kept as u64)?,
            )
        };
        Ok(ProtocolStats {
            n_periods: outcomes.len(),
            n_kept,
            n_errors,
            q,
            q_ci95,
            key: outcomes.iter().filter(|o| o.kept).map(|o| o.alice_bit).collect(),
            outcomes,
        })
    }

    pub fn kept_fraction(&self) -> f64 {
        self.n_kept as f64 / self.n_periods as f64
    }
}

/// Runs `n_periods` consecutive periods carrying the cable state across.
pub fn run_kljn_exchange(params: &KljnParams, n_periods: usize, seed: u64) -> Result<Vec<PeriodOutcome>> {
    let mut state = CircuitState::zeros(&params.cable);
    let mut outcomes = Vec::with_capacity(n_periods);
    for j in 0..n_periods {
        let run = run_kljn_period(params, derive_seed(seed, stream::PERIOD, j as u64), &state)?;
        outcomes.push(run.outcome);
        if params.carry_over {
            state = run.state;
        }
    }
    Ok(outcomes)
}

/// Splits `n` periods into fixed-length chains and maps `f(chain_index, len)`
/// over them in parallel, concatenating results in chain order.
pub(crate) fn over_chains<T: Send>(
    n: usize,
    f: impl Fn(usize, usize) -> Result<Vec<T>> + Sync,
) -> Result<Vec<T>> {
    let chains = n.div_ceil(CHAIN_LEN);
    let parts: Vec<Result<Vec<T>>> = (0..chains)
        .into_par_iter()
        .map(|c| f(c, CHAIN_LEN.min(n - c * CHAIN_LEN)))
        .collect();
    let mut out = Vec::with_capacity(n);
    for p in parts {
        out.extend(p?);
    }
    Ok(out)
}

pub fn kljn_outcomes(params: &KljnParams, n_periods: usize, seed: u64) -> Result<Vec<PeriodOutcome>> {
    over_chains(n_periods, |c, len| {
        run_kljn_exchange(params, len, derive_seed(seed, stream::CHAIN, c as u64))
    })
}

pub fn rrrt_outcomes(params: &RrrtParams, n_periods: usize, seed: u64) -> Result<Vec<PeriodOutcome>> {
    over_chains(n_periods, |c, len| {
        let chain_seed = derive_seed(seed, stream::CHAIN, c as u64);
        (0..len)
            .map(|j| {
                run_rrrt_period(params, derive_seed(chain_seed, stream::PERIOD, j as u64), &params.cable)
                    .map(|r| r.outcome)
            })
            .collect()
    })
}

/// Monte Carlo estimate of the KLJN bit error probability over kept periods.
pub fn estimate_bit_error(params: &KljnParams, n_periods: usize, seed: u64) -> Result<ProtocolStats> {
    if n_periods < 100 {
        return Err(Error::invalid(format!("need at least 100 periods, got {n_periods}")));
    }
    ProtocolStats::from_outcomes(kljn_outcomes(params, n_periods, seed)?)
}

pub fn estimate_rrrt_bit_error(params: &RrrtParams, n_periods: usize, seed: u64) -> Result<ProtocolStats> {
    if n_periods < 100 {
        return Err(Error::invalid(format!("need at least 100 periods, got {n_periods}")));
    }
    ProtocolStats::from_outcomes(rrrt_outcomes(params, n_periods, seed)?)
}

/// Key as a string of `0`/`1` characters.
pub fn key_to_string(key: &[Bit]) -> String {
    key.iter().map(|b| if b.as_u8() == 1 { '1' } else { '0' }).collect()
}

/// `period,class,kept,alice_decision,bob_decision,error` rows.
pub fn outcomes_csv(outcomes: &[PeriodOutcome]) -> String {
    let mut out = String::from("period,class,kept,alice_decision,bob_decision,error\n");
    for (j, o) in outcomes.iter().enumerate() {
        out.push_str(&format!(
            "{j},{},{},{},{},{}\n",
            o.pair_class, o.kept as u8, o.alice_decision, o.bob_decision, o.error as u8
        ));
    }
    out
}
