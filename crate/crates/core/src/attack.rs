//! Eve's side: the transient attack on KLJN/RRRT traffic and the DC-circuit
//! continuity experiment.
//!
//! The transient attack watches a cable tap right after the parties switch
//! their generators on. Before the wavefront has crossed the cable, the tap
//! voltage is set by the near-end source alone, whose amplitude through the
//! line scales as `sqrt(T/R)`. Eve thresholds an early-window statistic and
//! guesses the near-end bit: a fast rise means `R_L`.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::circuit::{CableModel, CircuitState, Trace};
use crate::error::{Error, Result};
use crate::protocol::{
    kljn_period, over_chains, rrrt_period, Bit, Extent, KljnParams, RrrtParams, CHAIN_LEN,
};
use crate::signal::{correlation_time_for_bandwidth, BOLTZMANN};
use crate::stats::{derive_seed, pooled_separation, rng_from_seed, stream, wilson95};

/// Early-window statistic Eve thresholds. Both are taken as natural logs so
/// that the class distributions are roughly symmetric.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Statistic {
    /// `ln( mean_j (V_j − V_0)² / window )`.
    MeanSquareGrowth,
    /// `ln( mean_j |V_{j+1} − V_j| / dt )`.
    MeanAbsIncrement,
}

/// Outcome of training the threshold classifier.
#[derive(Debug, Clone, PartialEq)]
pub struct Calibration {
    /// Guess L when the statistic is `>=` this value.
    pub threshold: f64,
    /// Class-mean difference in pooled standard deviations.
    pub separation: f64,
    pub training_error: f64,
    pub n_per_class: usize,
    pub warning: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EveConfig {
    pub tap_node: usize,
    /// Window length as a fraction of the correlation time `1/(2B)`.
    pub window_fraction: f64,
    pub statistic: Statistic,
    pub calibration: Option<Calibration>,
}

impl Default for EveConfig {
    fn default() -> Self {
        EveConfig {
            tap_node: 1,
            window_fraction: 0.1,
            statistic: Statistic::MeanSquareGrowth,
            calibration: None,
        }
    }
}

/// Separation below which the training data count as non-separable.
pub const SEPARABILITY_FLOOR: f64 = 0.5;

impl EveConfig {
    pub fn validate(&self, cable: &CableModel) -> Result<()> {
        if !(self.window_fraction > 0.0 && self.window_fraction <= 1.0) {
            return Err(Error::invalid(format!(
                "window_fraction must lie in (0, 1], got {}",
                self.window_fraction
            )));
        }
        if !cable.tap_nodes.contains(&self.tap_node) {
            return Err(Error::invalid(format!(
                "tap node {} is not among the cable taps {:?}",
                self.tap_node, cable.tap_nodes
            )));
        }
        Ok(())
    }

    pub fn window(&self, bandwidth: f64) -> Result<f64> {
        Ok(self.window_fraction * correlation_time_for_bandwidth(bandwidth)?)
    }
}

/// Protocol under attack, with its parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum ProtocolParams {
    Kljn(KljnParams),
    Rrrt(RrrtParams),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProtocolKind {
    Kljn,
    Rrrt,
}

impl ProtocolParams {
    pub fn kind(&self) -> ProtocolKind {
        match self {
            ProtocolParams::Kljn(_) => ProtocolKind::Kljn,
            ProtocolParams::Rrrt(_) => ProtocolKind::Rrrt,
        }
    }

    pub fn bandwidth(&self) -> f64 {
        match self {
            ProtocolParams::Kljn(p) => p.bandwidth,
            ProtocolParams::Rrrt(p) => p.bandwidth,
        }
    }

    pub fn cable(&self) -> &CableModel {
        match self {
            ProtocolParams::Kljn(p) => &p.cable,
            ProtocolParams::Rrrt(p) => &p.cable,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ProtocolParams::Kljn(p) => p.validate(),
            ProtocolParams::Rrrt(p) => p.validate(),
        }
    }
}

/// Early-window statistic at the configured tap.
pub fn transient_statistic(trace: &Trace, eve: &EveConfig, bandwidth: f64) -> Result<f64> {
    let v = trace
        .tap(eve.tap_node)
        .ok_or_else(|| Error::invalid(format!("node {} is not a recorded tap", eve.tap_node)))?;
    let window = eve.window(bandwidth)?;
    let n_w = (window / trace.dt).round() as usize;
    if n_w == 0 || n_w >= v.len() {
        return Err(Error::BadWindow(format!(
            "window of {window:e} s needs {n_w} samples but the trace holds {}",
            v.len()
        )));
    }
    let raw = match eve.statistic {
        Statistic::MeanSquareGrowth => {
            let v0 = v[0];
            let ms = v[1..=n_w].iter().map(|x| (x - v0) * (x - v0)).sum::<f64>() / n_w as f64;
            ms / window
        }
        Statistic::MeanAbsIncrement => {
            v[..=n_w].windows(2).map(|w| (w[1] - w[0]).abs()).sum::<f64>() / (n_w as f64 * trace.dt)
        }
    };
    Ok(raw.max(f64::MIN_POSITIVE).ln())
}

/// Thresholds the early-window statistic: fast charging means the near end
/// holds `R_L`. A statistic exactly at the threshold is guessed L.
pub fn transient_attack_guess(trace: &Trace, eve: &EveConfig, bandwidth: f64) -> Result<Bit> {
    let cal = eve
        .calibration
        .as_ref()
        .ok_or_else(|| Error::invalid("Eve's classifier is not calibrated"))?;
    Ok(classify(transient_statistic(trace, eve, bandwidth)?, cal.threshold))
}

fn classify(stat: f64, threshold: f64) -> Bit {
    if stat >= threshold {
        Bit::L
    } else {
        Bit::H
    }
}

/// Statistic and Alice's true bit for one kept period.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Labelled {
    stat: f64,
    bit: Bit,
}

/// Kept periods of one chain, labelled by Alice's bit.
fn chain_statistics(params: &ProtocolParams, eve: &EveConfig, len: usize, chain_seed: u64) -> Result<Vec<Labelled>> {
    let mut out = Vec::with_capacity(len);
    match params {
        ProtocolParams::Kljn(p) => {
            let mut state = CircuitState::zeros(&p.cable);
            for j in 0..len {
                let seed = derive_seed(chain_seed, stream::PERIOD, j as u64);
                let mut rng = rng_from_seed(derive_seed(seed, stream::BITS, 0));
                let alice = Bit::random(&mut rng);
                let bob = Bit::random(&mut rng);
                let run = kljn_period(p, seed, &state, alice, bob, Extent::Full)?;
                if run.outcome.kept {
                    out.push(Labelled {
                        stat: transient_statistic(&run.trace.transient, eve, p.bandwidth)?,
                        bit: alice,
                    });
                }
                if p.carry_over {
                    state = run.state;
                }
            }
        }
        ProtocolParams::Rrrt(p) => {
            for j in 0..len {
                let seed = derive_seed(chain_seed, stream::PERIOD, j as u64);
                let run = rrrt_period(p, seed, &p.cable, None, Extent::TransientOnly)?;
                if run.outcome.kept {
                    out.push(Labelled {
                        stat: transient_statistic(&run.trace.transient, eve, p.bandwidth)?,
                        bit: run.outcome.alice_bit,
                    });
                }
            }
        }
    }
    Ok(out)
}

fn labelled_statistics(params: &ProtocolParams, eve: &EveConfig, n_periods: usize, seed: u64) -> Result<Vec<Labelled>> {
    over_chains(n_periods, |c, len| {
        chain_statistics(params, eve, len, derive_seed(seed, stream::CHAIN, c as u64))
    })
}

/// Chains simulated per training round. Fixed, not tied to the thread count.
const TRAINING_BATCH: usize = 16;

/// Trains Eve's threshold on labelled simulations of the public protocol.
///
/// Chains are generated in fixed-size batches until both classes hold at
/// least `n_training` kept periods; the first `n_training` of each class are
/// used. The threshold minimises training error for the rule "guess L when
/// the statistic is at or above the threshold".
pub fn calibrate_transient_classifier(
    params: &ProtocolParams,
    eve: &EveConfig,
    n_training: usize,
    seed: u64,
) -> Result<EveConfig> {
    if n_training < 100 {
        return Err(Error::invalid(format!(
            "need at least 100 training periods per class, got {n_training}"
        )));
    }
    params.validate()?;
    eve.validate(params.cable())?;
    let train_seed = derive_seed(seed, stream::TRAINING, 0);
    let batch = TRAINING_BATCH;
    let mut low = Vec::new();
    let mut high = Vec::new();
    let mut next_chain = 0usize;
    while low.len() < n_training || high.len() < n_training {
        let parts: Vec<Result<Vec<Labelled>>> = (next_chain..next_chain + batch)
            .into_par_iter()
            .map(|c| chain_statistics(params, eve, CHAIN_LEN, derive_seed(train_seed, stream::CHAIN, c as u64)))
            .collect();
        next_chain += batch;
        for part in parts {
            for l in part? {
                match l.bit {
                    Bit::L => low.push(l.stat),
                    Bit::H => high.push(l.stat),
                }
            }
        }
        if next_chain > 1_000_000 {
            return Err(Error::InsufficientData("training produced too few kept periods".into()));
        }
    }
    low.truncate(n_training);
    high.truncate(n_training);

    let (threshold, errors) = best_threshold(&low, &high);
    let separation = pooled_separation(&low, &high);
    let warning = (separation < SEPARABILITY_FLOOR).then(|| {
        format!("training classes overlap: separation {separation:.3} pooled SD < {SEPARABILITY_FLOOR}")
    });
    Ok(EveConfig {
        calibration: Some(Calibration {
            threshold,
            separation,
            training_error: errors as f64 / (2 * n_training) as f64,
            n_per_class: n_training,
            warning,
        }),
        ..eve.clone()
    })
}

/// Scans thresholds at midpoints between sorted training values.
fn best_threshold(low: &[f64], high: &[f64]) -> (f64, usize) {
    let mut all: Vec<(f64, Bit)> = low
        .iter()
        .map(|&s| (s, Bit::L))
        .chain(high.iter().map(|&s| (s, Bit::H)))
        .collect();
    all.sort_by(|a, b| a.0.total_cmp(&b.0));
    // threshold below everything: every sample guessed L, all H wrong
    let mut errors = high.len();
    let mut best = (f64::NEG_INFINITY, errors);
    let mut i = 0;
    while i < all.len() {
        // move every sample sharing this value below the threshold together
        let value = all[i].0;
        while i < all.len() && all[i].0 == value {
            match all[i].1 {
                Bit::L => errors += 1,
                Bit::H => errors -= 1,
            }
            i += 1;
        }
        if errors < best.1 {
            let t = if i < all.len() {
                0.5 * (value + all[i].0)
            } else {
                f64::INFINITY
            };
            best = (t, errors);
        }
    }
    best
}

/// Eve's success on secure bits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttackStats {
    pub n_secure_bits: usize,
    pub n_correct: usize,
    pub p: f64,
    pub ci95: (f64, f64),
}

impl AttackStats {
    pub fn from_counts(n_correct: usize, n_secure_bits: usize) -> Result<Self> {
        Ok(AttackStats {
            n_secure_bits,
            n_correct,
            p: n_correct as f64 / n_secure_bits as f64,
            ci95: wilson95(n_correct as u64, n_secure_bits as u64)?,
        })
    }

    pub fn ci_contains(&self, p: f64) -> bool {
        self.ci95.0 <= p && p <= self.ci95.1
    }
}

/// Minimum number of secure bits behind a reported `p`.
pub const MIN_SECURE_BITS: usize = 500;

/// Runs the protocol, attacks every period and scores the guesses on the
/// kept (secure) periods only. On a kept KLJN period the near-end guess fixes
/// the whole LH/HL arrangement; on RRRT it is Alice's comparison bit.
pub fn estimate_eve_success(
    params: &ProtocolParams,
    eve: &EveConfig,
    n_periods: usize,
    seed: u64,
) -> Result<AttackStats> {
    params.validate()?;
    eve.validate(params.cable())?;
    let threshold = eve
        .calibration
        .as_ref()
        .ok_or_else(|| Error::invalid("Eve's classifier is not calibrated"))?
        .threshold;
    let labelled = labelled_statistics(params, eve, n_periods, seed)?;
    if labelled.len() < MIN_SECURE_BITS {
        return Err(Error::InsufficientData(format!(
            "{} secure bits from {n_periods} periods; need at least {MIN_SECURE_BITS}",
            labelled.len()
        )));
    }
    let correct = labelled.iter().filter(|l| classify(l.stat, threshold) == l.bit).count();
    AttackStats::from_counts(correct, labelled.len())
}

// ---------------------------------------------------------------------------
// DC continuity experiment

/// Alice's and Bob's series resistors, Ω.
pub const DC_PARTY_RESISTANCE: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DcMode {
    VoltageOnly,
    VoltageAndCurrent,
}

impl DcMode {
    pub fn name(self) -> &'static str {
        match self {
            DcMode::VoltageOnly => "voltage_only",
            DcMode::VoltageAndCurrent => "voltage_and_current",
        }
    }
}

/// Alice –1 Ω– [U_AE] –R_E– [U_BE] –1 Ω– Bob, with secret DC levels `±U0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DcScenario {
    pub u0: f64,
    pub r_e: f64,
    pub temperature: f64,
    pub include_noise: bool,
    pub averaging_time: f64,
    pub bandwidth: f64,
    pub mode: DcMode,
}

impl Default for DcScenario {
    fn default() -> Self {
        DcScenario {
            u0: 1.0,
            r_e: 1.0,
            temperature: 1e19,
            include_noise: true,
            averaging_time: 1e-3,
            bandwidth: 1e5,
            mode: DcMode::VoltageOnly,
        }
    }
}

impl DcScenario {
    pub fn validate(&self) -> Result<()> {
        if !(self.u0 > 0.0) || !self.u0.is_finite() {
            return Err(Error::invalid("U0 must be > 0"));
        }
        if !(self.r_e >= 0.0) || !self.r_e.is_finite() {
            return Err(Error::invalid(format!("R_E must be >= 0, got {}", self.r_e)));
        }
        if !(self.temperature >= 0.0) {
            return Err(Error::invalid("temperature must be >= 0"));
        }
        if !(self.averaging_time > 0.0) {
            return Err(Error::invalid("averaging time must be > 0"));
        }
        if !(self.bandwidth > 0.0) {
            return Err(Error::invalid("bandwidth must be > 0"));
        }
        if !(self.averaging_time * self.bandwidth >= 1.0) {
            return Err(Error::invalid(format!(
                "averaging_time·B must be >= 1, got {}",
                self.averaging_time * self.bandwidth
            )));
        }
        Ok(())
    }

    /// Standard deviation of a resistor's Johnson voltage averaged over τ:
    /// `sqrt(4kT·R / (2τ))`.
    pub fn averaged_noise_std(&self, resistance: f64) -> f64 {
        if !self.include_noise {
            return 0.0;
        }
        (4.0 * BOLTZMANN * self.temperature * resistance / (2.0 * self.averaging_time)).sqrt()
    }
}

/// Time-averaged quantities Eve can read.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DcObservation {
    pub u_ae: f64,
    pub u_be: f64,
    /// Loop current, positive from Bob's side toward Alice's.
    pub current: f64,
}

/// Solves the loop for given source levels and averaged noise voltages.
pub fn dc_observe(u_a: f64, u_b: f64, r_e: f64, noise: [f64; 3]) -> DcObservation {
    let [n_a, n_b, n_e] = noise;
    let r = DC_PARTY_RESISTANCE;
    let current = (u_b + n_b - u_a - n_a - n_e) / (2.0 * r + r_e);
    DcObservation {
        u_ae: u_a + n_a + current * r,
        u_be: u_b + n_b - current * r,
        current,
    }
}

/// Voltage-only Eve: the current follows from the drop across `R_E`.
pub fn dc_eve_voltage_only(u_ae: f64, u_be: f64, r_e: f64) -> Result<(f64, f64)> {
    if !(r_e >= 0.0) {
        return Err(Error::invalid(format!("R_E must be >= 0, got {r_e}")));
    }
    if r_e == 0.0 {
        return Err(Error::Singular(
            "R_E = 0: the tap voltages coincide and the loop current cannot be inferred".into(),
        ));
    }
    let i = (u_be - u_ae) / r_e;
    Ok((u_ae - i * DC_PARTY_RESISTANCE, u_be + i * DC_PARTY_RESISTANCE))
}

/// Eve who also measures the current, at a single point `U_E`.
pub fn dc_eve_full(u_e: f64, current: f64) -> (f64, f64) {
    dc_eve_full_taps(u_e, u_e, current)
}

/// Current-measuring Eve reading both sides of her resistor.
pub fn dc_eve_full_taps(u_ae: f64, u_be: f64, current: f64) -> (f64, f64) {
    (u_ae - current * DC_PARTY_RESISTANCE, u_be + current * DC_PARTY_RESISTANCE)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContinuityRow {
    pub r_e: f64,
    pub mode: DcMode,
    pub noise: bool,
    pub n: usize,
    pub p: f64,
    pub ci95: (f64, f64),
    /// Standard deviation of Eve's error on `U_A`.
    pub est_std: f64,
}

/// Minimum trials per grid point.
pub const MIN_DC_TRIALS: usize = 500;

/// Eve's bit-guessing success across an `R_E` grid.
///
/// Trial `j` uses the same bits and the same standard-normal noise draws at
/// every grid point; only the physical scale of the noise changes with `R_E`
/// and `τ`. Differences between grid points therefore reflect the physics
/// rather than fresh sampling noise.
pub fn run_continuity_experiment(
    grid: &[f64],
    template: &DcScenario,
    n_trials: usize,
    seed: u64,
) -> Result<Vec<ContinuityRow>> {
    if grid.is_empty() {
        return Err(Error::invalid("R_E grid is empty"));
    }
    if n_trials < MIN_DC_TRIALS {
        return Err(Error::invalid(format!(
            "need at least {MIN_DC_TRIALS} trials per grid point, got {n_trials}"
        )));
    }
    template.validate()?;
    for &r_e in grid {
        DcScenario { r_e, ..*template }.validate()?;
        if template.mode == DcMode::VoltageOnly {
            dc_eve_voltage_only(0.0, 0.0, r_e)?;
        }
    }
    let draws: Vec<(f64, f64, [f64; 3])> = (0..n_trials)
        .into_par_iter()
        .map(|j| {
            let mut rng = rng_from_seed(derive_seed(seed, stream::TRIAL, j as u64));
            let sign = |b: bool| if b { 1.0 } else { -1.0 };
            let u_a = sign(rng.random()) * template.u0;
            let u_b = sign(rng.random()) * template.u0;
            let z = [
                rng.sample(StandardNormal),
                rng.sample(StandardNormal),
                rng.sample(StandardNormal),
            ];
            (u_a, u_b, z)
        })
        .collect();
    grid.iter()
        .map(|&r_e| {
            let sc = DcScenario { r_e, ..*template };
            let s_party = sc.averaged_noise_std(DC_PARTY_RESISTANCE);
            let s_eve = sc.averaged_noise_std(r_e);
            let mut correct = 0usize;
            let mut sum = 0.0;
            let mut sum_sq = 0.0;
            for &(u_a, u_b, z) in &draws {
                let obs = dc_observe(u_a, u_b, r_e, [z[0] * s_party, z[1] * s_party, z[2] * s_eve]);
                let (est_a, _) = match sc.mode {
                    DcMode::VoltageOnly => dc_eve_voltage_only(obs.u_ae, obs.u_be, r_e)?,
                    DcMode::VoltageAndCurrent => dc_eve_full_taps(obs.u_ae, obs.u_be, obs.current),
                };
                // sign decision; zero goes to the negative level
                if (est_a > 0.0) == (u_a > 0.0) {
                    correct += 1;
                }
                let err = est_a - u_a;
                sum += err;
                sum_sq += err * err;
            }
            let n = n_trials as f64;
            let var = ((sum_sq - sum * sum / n) / (n - 1.0)).max(0.0);
            let stats = AttackStats::from_counts(correct, n_trials)?;
            Ok(ContinuityRow {
                r_e,
                mode: sc.mode,
                noise: sc.include_noise,
                n: n_trials,
                p: stats.p,
                ci95: stats.ci95,
                est_std: var.sqrt(),
            })
        })
        .collect()
}

/// Log-spaced grid with `per_decade` points per decade from `lo` to `hi`
/// inclusive.
pub fn log_grid(lo: f64, hi: f64, per_decade: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi > lo) || per_decade == 0 {
        return Err(Error::invalid("log grid needs 0 < lo < hi and per_decade >= 1"));
    }
    let decades = (hi / lo).log10();
    let steps = (decades * per_decade as f64).round() as usize;
    Ok((0..=steps)
        .map(|i| lo * 10f64.powf(i as f64 / per_decade as f64))
        .collect())
}

/// `R_E,mode,noise,n,p,ci_lo,ci_hi,est_std` rows.
pub fn continuity_csv(rows: &[ContinuityRow]) -> String {
    let mut out = String::from("R_E,mode,noise,n,p,ci_lo,ci_hi,est_std\n");
    for r in rows {
        out.push_str(&format!(
            "{:e},{},{},{},{:.6},{:.6},{:.6},{:e}\n",
            r.r_e,
            r.mode.name(),
            r.noise as u8,
            r.n,
            r.p,
            r.ci95.0,
            r.ci95.1,
            r.est_std
        ));
    }
    out
}
