//! Experiment configuration in TOML.
//!
//! A config names an experiment and overrides any subset of the defaults for
//! that experiment. Parsing merges the user's tables over the defaults and
//! then deserialises strictly, so misspelled keys are rejected.

use serde::{Deserialize, Serialize};

use crate::attack::{log_grid, DcMode, DcScenario, EveConfig, ProtocolParams, Statistic};
use crate::circuit::CableModel;
use crate::error::{Error, Result};
use crate::protocol::{Estimator, KljnParams, Resolution, RrrtDraw, RrrtParams, SwitchingMode};
use crate::signal::BOLTZMANN;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    KljnExchange,
    AttackTransient,
    DefendRrrt,
    Amplify,
    Continuity,
    PsdCheck,
    ScalingDemo,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 7] = [
        ExperimentKind::KljnExchange,
        ExperimentKind::AttackTransient,
        ExperimentKind::DefendRrrt,
        ExperimentKind::Amplify,
        ExperimentKind::Continuity,
        ExperimentKind::PsdCheck,
        ExperimentKind::ScalingDemo,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::KljnExchange => "kljn-exchange",
            ExperimentKind::AttackTransient => "attack-transient",
            ExperimentKind::DefendRrrt => "defend-rrrt",
            ExperimentKind::Amplify => "amplify",
            ExperimentKind::Continuity => "continuity",
            ExperimentKind::PsdCheck => "psd-check",
            ExperimentKind::ScalingDemo => "scaling-demo",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        Self::ALL.into_iter().find(|k| k.name() == name).ok_or_else(|| {
            let known: Vec<_> = Self::ALL.iter().map(|k| k.name()).collect();
            Error::Config(format!("unknown experiment {name:?}; expected one of {}", known.join(", ")))
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSection {
    pub bandwidth: f64,
    /// Effective noise temperature, K.
    pub temperature: f64,
    /// Sets `4kT = 1` (temperature `1/(4k)`), overriding `temperature`.
    pub normalized_units: bool,
}

impl NoiseSection {
    pub fn effective_temperature(&self) -> f64 {
        if self.normalized_units {
            1.0 / (4.0 * BOLTZMANN)
        } else {
            self.temperature
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CableKind {
    Ideal,
    Lumped,
    LcLine,
    Ladder,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CableSection {
    pub kind: CableKind,
    pub n_segments: usize,
    /// One-way delay for `lc_line`, s.
    pub delay: f64,
    /// Characteristic impedance for `lc_line`, Ω.
    pub impedance: f64,
    /// Total capacitance for `lumped`, F.
    pub capacitance: f64,
    /// Per-segment values; `series_resistance` also applies to `lc_line`.
    pub series_resistance: f64,
    pub series_inductance: f64,
    pub shunt_capacitance: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tap_nodes: Option<Vec<usize>>,
}

impl CableSection {
    fn ideal() -> Self {
        CableSection {
            kind: CableKind::Ideal,
            n_segments: 1,
            delay: 0.0,
            impedance: 0.0,
            capacitance: 0.0,
            series_resistance: 0.0,
            series_inductance: 0.0,
            shunt_capacitance: 0.0,
            tap_nodes: None,
        }
    }

    fn attack_line() -> Self {
        CableSection {
            kind: CableKind::LcLine,
            n_segments: 32,
            delay: 5e-5,
            impedance: 100.0,
            ..CableSection::ideal()
        }
    }

    pub fn build(&self) -> Result<CableModel> {
        let mut cable = match self.kind {
            CableKind::Ideal => CableModel::ideal(),
            CableKind::Lumped => CableModel::lumped(self.capacitance),
            CableKind::LcLine => {
                if !(self.delay > 0.0 && self.impedance > 0.0) || self.n_segments < 2 {
                    return Err(Error::Config(
                        "cable.kind = lc_line needs delay > 0, impedance > 0 and n_segments >= 2".into(),
                    ));
                }
                let mut c = CableModel::lc_line(self.n_segments, self.delay, self.impedance);
                c.series_resistance = self.series_resistance;
                c
            }
            CableKind::Ladder => {
                let mut c = CableModel::lc_line(self.n_segments.max(1), 0.0, 1.0);
                c.n_segments = self.n_segments;
                c.series_resistance = self.series_resistance;
                c.series_inductance = self.series_inductance;
                c.shunt_capacitance = self.shunt_capacitance;
                c
            }
        };
        if let Some(taps) = &self.tap_nodes {
            cable.tap_nodes = taps.clone();
        }
        cable.validate().map_err(|e| Error::Config(format!("cable: {e}")))?;
        Ok(cable)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SwitchingKind {
    Abrupt,
    SymmetricRamp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorKind {
    Simulated,
    Analytic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolSection {
    pub r_low: f64,
    pub r_high: f64,
    pub bit_period: f64,
    pub switching: SwitchingKind,
    /// Used when `switching = "symmetric_ramp"`, s.
    pub ramp_time: f64,
    pub estimator: EstimatorKind,
    pub carry_over: bool,
    pub steady_per_bandwidth: f64,
    pub transient_per_bandwidth: f64,
    pub transient_span: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DrawKind {
    LogUniform,
    TransientMatched,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RrrtSection {
    pub r_min: f64,
    pub r_max: f64,
    pub t_min: f64,
    pub t_max: f64,
    pub draw: DrawKind,
    pub resolution_threshold: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StatisticKind {
    MeanSquareGrowth,
    MeanAbsIncrement,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttackSection {
    pub tap_node: usize,
    pub window_fraction: f64,
    pub statistic: StatisticKind,
    /// Training periods per class.
    pub n_training: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PrivacySection {
    /// Eve's per-bit success before amplification; one table block per value.
    pub p0: Vec<f64>,
    pub stages: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContinuitySection {
    pub u0: f64,
    pub temperature: f64,
    pub averaging_time: f64,
    pub bandwidth: f64,
    pub r_e_min: f64,
    pub r_e_max: f64,
    pub points_per_decade: usize,
    /// Add `R_E = 0` to the grid for the current-measuring Eve.
    pub include_zero: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PsdSection {
    pub spectral_density: f64,
    pub bandwidth: f64,
    /// Record length in units of `1/B`.
    pub duration_bandwidth: f64,
    /// Samples per `1/B`.
    pub samples_per_bandwidth: f64,
    pub segment_len: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalingSection {
    pub resistances: Vec<f64>,
    pub capacitance: f64,
    /// Window as a fraction of the smallest `RC`.
    pub window_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub master_seed: u64,
    /// Protocol periods for the exchange and attack experiments.
    pub n_periods: usize,
    /// Trials for continuity (per grid point), amplify (key bits) and
    /// psd-check (records).
    pub n_trials: usize,
    pub output: String,
    pub noise: NoiseSection,
    pub cable: CableSection,
    pub protocol: ProtocolSection,
    pub rrrt: RrrtSection,
    pub attack: AttackSection,
    pub privacy: PrivacySection,
    pub continuity: ContinuitySection,
    pub psd: PsdSection,
    pub scaling: ScalingSection,
}

impl ExperimentConfig {
    /// Built-in defaults for an experiment.
    pub fn defaults(kind: ExperimentKind) -> Self {
        let attack_like = matches!(kind, ExperimentKind::AttackTransient | ExperimentKind::DefendRrrt);
        ExperimentConfig {
            experiment: kind,
            master_seed: 1,
            n_periods: match kind {
                ExperimentKind::KljnExchange => 200,
                _ => 4400,
            },
            n_trials: match kind {
                ExperimentKind::Amplify => 1 << 20,
                ExperimentKind::PsdCheck => 8,
                _ => 1000,
            },
            output: "results".into(),
            noise: NoiseSection {
                bandwidth: 1e3,
                temperature: 1e18,
                normalized_units: false,
            },
            cable: if attack_like {
                CableSection::attack_line()
            } else {
                CableSection::ideal()
            },
            protocol: ProtocolSection {
                r_low: 1e3,
                r_high: 1e5,
                bit_period: if attack_like { 0.1 } else { 10.0 },
                switching: SwitchingKind::Abrupt,
                ramp_time: 0.01,
                estimator: if attack_like {
                    EstimatorKind::Analytic
                } else {
                    EstimatorKind::Simulated
                },
                carry_over: true,
                steady_per_bandwidth: 100.0,
                transient_per_bandwidth: 2000.0,
                transient_span: 2.0,
            },
            rrrt: RrrtSection {
                r_min: 1e3,
                r_max: 1e4,
                t_min: 1e18,
                t_max: 1e19,
                draw: DrawKind::TransientMatched,
                resolution_threshold: 0.02,
            },
            attack: AttackSection {
                tap_node: 1,
                window_fraction: 0.1,
                statistic: StatisticKind::MeanSquareGrowth,
                n_training: 1000,
            },
            privacy: PrivacySection {
                p0: vec![0.6, 0.7, 0.75, 0.8, 0.9],
                stages: 4,
            },
            continuity: ContinuitySection {
                u0: 1.0,
                temperature: 1e19,
                averaging_time: 1e-3,
                bandwidth: 1e5,
                r_e_min: 1e-4,
                r_e_max: 1e1,
                points_per_decade: 5,
                include_zero: true,
            },
            psd: PsdSection {
                spectral_density: 1e-12,
                bandwidth: 1e4,
                duration_bandwidth: 1e4,
                samples_per_bandwidth: 10.0,
                segment_len: 1024,
            },
            scaling: ScalingSection {
                resistances: vec![1e3, 4e3, 1.6e4],
                capacitance: 1e-9,
                window_fraction: 0.1,
            },
        }
    }

    pub fn kljn_params(&self) -> Result<KljnParams> {
        let p = &self.protocol;
        let params = KljnParams {
            r_low: p.r_low,
            r_high: p.r_high,
            temperature: self.noise.effective_temperature(),
            bandwidth: self.noise.bandwidth,
            bit_period: p.bit_period,
            switching: self.switching_mode(),
            cable: self.cable.build()?,
            resolution: self.resolution(),
            estimator: match p.estimator {
                EstimatorKind::Simulated => Estimator::Simulated,
                EstimatorKind::Analytic => Estimator::Analytic,
            },
            carry_over: p.carry_over,
        };
        params.validate().map_err(|e| Error::Config(format!("protocol: {e}")))?;
        Ok(params)
    }

    pub fn rrrt_params(&self) -> Result<RrrtParams> {
        let r = &self.rrrt;
        let params = RrrtParams {
            r_min: r.r_min,
            r_max: r.r_max,
            t_min: r.t_min,
            t_max: r.t_max,
            draw: match r.draw {
                DrawKind::LogUniform => RrrtDraw::LogUniform,
                DrawKind::TransientMatched => RrrtDraw::TransientMatched,
            },
            resolution_threshold: r.resolution_threshold,
            bandwidth: self.noise.bandwidth,
            bit_period: self.protocol.bit_period,
            switching: self.switching_mode(),
            cable: self.cable.build()?,
            resolution: self.resolution(),
            estimator: match self.protocol.estimator {
                EstimatorKind::Simulated => Estimator::Simulated,
                EstimatorKind::Analytic => Estimator::Analytic,
            },
        };
        params.validate().map_err(|e| Error::Config(format!("rrrt: {e}")))?;
        Ok(params)
    }

    /// Protocol attacked by the transient experiments.
    pub fn attacked_protocol(&self) -> Result<ProtocolParams> {
        match self.experiment {
            ExperimentKind::DefendRrrt => Ok(ProtocolParams::Rrrt(self.rrrt_params()?)),
            _ => Ok(ProtocolParams::Kljn(self.kljn_params()?)),
        }
    }

    pub fn eve(&self) -> Result<EveConfig> {
        let eve = EveConfig {
            tap_node: self.attack.tap_node,
            window_fraction: self.attack.window_fraction,
            statistic: match self.attack.statistic {
                StatisticKind::MeanSquareGrowth => Statistic::MeanSquareGrowth,
                StatisticKind::MeanAbsIncrement => Statistic::MeanAbsIncrement,
            },
            calibration: None,
        };
        eve.validate(&self.cable.build()?)
            .map_err(|e| Error::Config(format!("attack: {e}")))?;
        Ok(eve)
    }

    pub fn dc_scenario(&self, mode: DcMode, include_noise: bool) -> DcScenario {
        let c = &self.continuity;
        DcScenario {
            u0: c.u0,
            r_e: c.r_e_max,
            temperature: c.temperature,
            include_noise,
            averaging_time: c.averaging_time,
            bandwidth: c.bandwidth,
            mode,
        }
    }

    /// Positive log-spaced `R_E` grid.
    pub fn r_e_grid(&self) -> Result<Vec<f64>> {
        let c = &self.continuity;
        log_grid(c.r_e_min, c.r_e_max, c.points_per_decade).map_err(|e| Error::Config(format!("continuity: {e}")))
    }

    fn switching_mode(&self) -> SwitchingMode {
        match self.protocol.switching {
            SwitchingKind::Abrupt => SwitchingMode::Abrupt,
            SwitchingKind::SymmetricRamp => SwitchingMode::SymmetricRamp {
                ramp_time: self.protocol.ramp_time,
            },
        }
    }

    fn resolution(&self) -> Resolution {
        Resolution {
            steady_per_bandwidth: self.protocol.steady_per_bandwidth,
            transient_per_bandwidth: self.protocol.transient_per_bandwidth,
            transient_span: self.protocol.transient_span,
        }
    }

    /// Checks the preconditions of every module the experiment touches.
    pub fn validate(&self) -> Result<()> {
        if self.master_seed > i64::MAX as u64 {
            return Err(Error::Config("master_seed must fit in a signed 64-bit integer".into()));
        }
        if !(self.noise.bandwidth > 0.0) {
            return Err(Error::Config("noise.bandwidth must be > 0".into()));
        }
        if !(self.noise.temperature > 0.0) {
            return Err(Error::Config("noise.temperature must be > 0".into()));
        }
        match self.experiment {
            ExperimentKind::KljnExchange => {
                self.kljn_params()?;
                if self.n_periods < 100 {
                    return Err(Error::Config("n_periods must be >= 100".into()));
                }
            }
            ExperimentKind::AttackTransient | ExperimentKind::DefendRrrt => {
                self.attacked_protocol()?;
                self.eve()?;
                if self.attack.n_training < 100 {
                    return Err(Error::Config("attack.n_training must be >= 100 per class".into()));
                }
            }
            ExperimentKind::Amplify => {
                let p = &self.privacy;
                if p.p0.is_empty() || p.p0.iter().any(|p| !(0.5..=1.0).contains(p)) {
                    return Err(Error::Config("privacy.p0 values must lie in [0.5, 1]".into()));
                }
                if p.stages >= 32 || self.n_trials < (1usize << p.stages) {
                    return Err(Error::Config(format!(
                        "amplify needs n_trials >= 2^stages, got {} bits for {} stages",
                        self.n_trials, p.stages
                    )));
                }
            }
            ExperimentKind::Continuity => {
                self.r_e_grid()?;
                self.dc_scenario(DcMode::VoltageOnly, true)
                    .validate()
                    .map_err(|e| Error::Config(format!("continuity: {e}")))?;
                if self.n_trials < crate::attack::MIN_DC_TRIALS {
                    return Err(Error::Config(format!(
                        "continuity needs n_trials >= {}",
                        crate::attack::MIN_DC_TRIALS
                    )));
                }
            }
            ExperimentKind::PsdCheck => {
                let p = &self.psd;
                if !(p.spectral_density >= 0.0 && p.bandwidth > 0.0) {
                    return Err(Error::Config("psd: need spectral_density >= 0 and bandwidth > 0".into()));
                }
                if !(p.samples_per_bandwidth >= 2.0) {
                    return Err(Error::Config("psd: samples_per_bandwidth must be >= 2 (Nyquist)".into()));
                }
                if !(p.duration_bandwidth >= 1.0) {
                    return Err(Error::Config("psd: duration_bandwidth must be >= 1".into()));
                }
                let n = (p.duration_bandwidth * p.samples_per_bandwidth).round() as usize;
                if !p.segment_len.is_power_of_two() || p.segment_len > n {
                    return Err(Error::Config(
                        "psd: segment_len must be a power of two no longer than the record".into(),
                    ));
                }
                if self.n_trials == 0 {
                    return Err(Error::Config("psd-check needs n_trials >= 1".into()));
                }
            }
            ExperimentKind::ScalingDemo => {
                let s = &self.scaling;
                if s.resistances.is_empty() || s.resistances.iter().any(|r| !(*r > 0.0)) {
                    return Err(Error::Config("scaling: resistances must be > 0".into()));
                }
                if !(s.capacitance > 0.0) {
                    return Err(Error::Config("scaling: capacitance must be > 0".into()));
                }
                if !(s.window_fraction > 0.0 && s.window_fraction <= 0.1) {
                    return Err(Error::Config(
                        "scaling: window_fraction must lie in (0, 0.1] (early-transient regime)".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }
}

fn merge(base: &mut toml::Table, over: toml::Table) {
    for (k, v) in over {
        match (base.get_mut(&k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => merge(b, o),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

/// Parses and validates a config, filling unspecified keys with the
/// experiment's defaults.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let user: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
    let name = user
        .get("experiment")
        .ok_or_else(|| Error::Config("missing key `experiment`".into()))?
        .as_str()
        .ok_or_else(|| Error::Config("`experiment` must be a string".into()))?;
    let kind = ExperimentKind::from_name(name)?;
    let mut merged = toml::Table::try_from(ExperimentConfig::defaults(kind))
        .map_err(|e| Error::Config(e.to_string()))?;
    merge(&mut merged, user);
    let config: ExperimentConfig = merged.try_into().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
    config.validate()?;
    Ok(config)
}

pub fn load_config(path: &std::path::Path) -> Result<ExperimentConfig> {
    parse_config(&std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn minimal_config_takes_defaults() {
        let c = parse_config("experiment = \"attack-transient\"\nmaster_seed = 9\n").unwrap();
        let mut expected = ExperimentConfig::defaults(ExperimentKind::AttackTransient);
        expected.master_seed = 9;
        assert_eq!(c, expected);
    }

    #[test]
    fn partial_section_keeps_other_defaults() {
        let c = parse_config("experiment = \"kljn-exchange\"\n[protocol]\nr_high = 2e4\n").unwrap();
        assert_eq!(c.protocol.r_high, 2e4);
        assert_eq!(c.protocol.r_low, 1e3);
        assert_eq!(c.cable.kind, CableKind::Ideal);
    }

    #[test]
    fn low_not_below_high_names_the_invariant() {
        let err = parse_config("experiment = \"kljn-exchange\"\n[protocol]\nr_low = 1e5\nr_high = 1e3\n")
            .unwrap_err()
            .to_string();
        assert!(err.contains("R_L < R_H"), "{err}");
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(parse_config("experiment = \"amplify\"\nmaster_sed = 1\n").is_err());
        assert!(parse_config("experiment = \"amplify\"\n[privacy]\nstage = 3\n").is_err());
        assert!(parse_config("experiment = \"amplify\"\n[bogus]\nx = 1\n").is_err());
    }

    #[test]
    fn syntax_and_name_errors() {
        assert!(matches!(parse_config("experiment = "), Err(Error::Config(_))));
        assert!(matches!(parse_config("master_seed = 1"), Err(Error::Config(_))));
        assert!(matches!(parse_config("experiment = \"nope\""), Err(Error::Config(_))));
    }

    #[test]
    fn defaults_are_valid_and_round_trip() {
        for kind in ExperimentKind::ALL {
            let c = ExperimentConfig::defaults(kind);
            c.validate().unwrap();
            let text = c.to_toml().unwrap();
            assert_eq!(parse_config(&text).unwrap(), c, "{}", kind.name());
        }
    }

    #[test]
    fn normalized_units_set_four_kt_to_one() {
        let c = parse_config("experiment = \"kljn-exchange\"\n[noise]\nnormalized_units = true\n").unwrap();
        let t = c.noise.effective_temperature();
        assert!((4.0 * BOLTZMANN * t - 1.0).abs() < 1e-12);
    }

    #[test]
    fn attack_tap_must_exist() {
        let err = parse_config("experiment = \"attack-transient\"\n[attack]\ntap_node = 5\n").unwrap_err();
        assert!(err.to_string().contains("tap node"), "{err}");
    }

    #[test]
    fn cable_kinds_build() {
        let mut s = CableSection::attack_line();
        assert_eq!(s.build().unwrap().n_segments, 32);
        s.kind = CableKind::Lumped;
        s.capacitance = 1e-9;
        assert_eq!(s.build().unwrap().total_capacitance(), 1e-9);
        s.kind = CableKind::Ladder;
        s.n_segments = 4;
        s.series_inductance = 0.0;
        s.series_resistance = 0.0;
        assert!(s.build().is_err());
        s.series_resistance = 1.0;
        assert!(s.build().is_ok());
    }

    proptest! {
        #[test]
        fn overrides_round_trip(seed in 0u64..1 << 40, r_high in 2e3f64..1e6, periods in 100usize..10_000) {
            let text = format!(
                "experiment = \"kljn-exchange\"\nmaster_seed = {seed}\nn_periods = {periods}\n[protocol]\nr_high = {r_high:e}\n"
            );
            let c = parse_config(&text).unwrap();
            prop_assert_eq!(c.master_seed, seed);
            prop_assert_eq!(c.protocol.r_high, r_high);
            let again = parse_config(&c.to_toml().unwrap()).unwrap();
            prop_assert_eq!(again, c);
        }
    }
}
