//! Runs a configured experiment and collects its outputs.
//!
//! Every experiment returns a [`Report`]: a short key/value summary in which
//! each probability carries a 95% interval, plus one CSV table. Outputs are
//! pure functions of the config, so the same config gives byte-identical
//! files whatever the thread count.

use std::path::{Path, PathBuf};

use crate::attack::{
    calibrate_transient_classifier, continuity_csv, estimate_eve_success, run_continuity_experiment,
    ContinuityRow, DcMode, ProtocolParams,
};
use crate::circuit::charging_rate_demo;
use crate::config::{ExperimentConfig, ExperimentKind};
use crate::error::{Error, Result};
use crate::privacy::{leak_metrics, predicted_p_after_stages, simulate_amplification};
use crate::protocol::{estimate_bit_error, key_to_string, outcomes_csv, SwitchingMode};
use crate::signal::{generate_band_limited_gaussian, mean_square, NoiseSpec};
use crate::stats::{derive_seed, stream, wilson95};

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub experiment: ExperimentKind,
    /// Ordered `(key, value)` summary lines.
    pub summary: Vec<(String, String)>,
    /// `(file name, contents)`; the first entry is the experiment's CSV.
    pub files: Vec<(String, String)>,
}

impl Report {
    fn new(experiment: ExperimentKind) -> Self {
        Report {
            experiment,
            summary: vec![("experiment".into(), experiment.name().into())],
            files: Vec::new(),
        }
    }

    fn put(&mut self, key: &str, value: impl ToString) {
        self.summary.push((key.into(), value.to_string()));
    }

    fn put_p(&mut self, key: &str, p: f64, ci: (f64, f64)) {
        self.put(key, format!("{p:.4} (95% CI {:.4}..{:.4})", ci.0, ci.1));
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.summary.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn csv(&self) -> &str {
        self.files.first().map(|(_, c)| c.as_str()).unwrap_or("")
    }

    pub fn summary_text(&self) -> String {
        self.summary.iter().map(|(k, v)| format!("{k}: {v}\n")).collect()
    }

    /// Writes every file into `dir`, creating it if needed.
    pub fn write_to(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let mut paths = Vec::new();
        for (name, contents) in &self.files {
            let path = dir.join(name);
            std::fs::write(&path, contents)?;
            paths.push(path);
        }
        Ok(paths)
    }
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<Report> {
    config.validate()?;
    match config.experiment {
        ExperimentKind::KljnExchange => kljn_exchange(config),
        ExperimentKind::AttackTransient | ExperimentKind::DefendRrrt => transient_attack(config),
        ExperimentKind::Amplify => amplify(config),
        ExperimentKind::Continuity => continuity(config),
        ExperimentKind::PsdCheck => psd_check(config),
        ExperimentKind::ScalingDemo => scaling_demo(config),
    }
}

fn kljn_exchange(config: &ExperimentConfig) -> Result<Report> {
    let params = config.kljn_params()?;
    let stats = estimate_bit_error(&params, config.n_periods, config.master_seed)?;
    let mut r = Report::new(config.experiment);
    r.put("bandwidth_x_bit_period", params.bandwidth * params.bit_period);
    r.put("n_periods", stats.n_periods);
    r.put("n_kept", stats.n_kept);
    r.put_p(
        "kept_fraction",
        stats.kept_fraction(),
        wilson95(stats.n_kept as u64, stats.n_periods as u64)?,
    );
    r.put("n_errors", stats.n_errors);
    r.put_p("q", stats.q, stats.q_ci95);
    r.put("key_length", stats.key.len());
    r.files.push(("kljn-exchange.csv".into(), outcomes_csv(&stats.outcomes)));
    r.files.push(("kljn-exchange-key.txt".into(), key_to_string(&stats.key)));
    Ok(r)
}

fn transient_attack(config: &ExperimentConfig) -> Result<Report> {
    let params = config.attacked_protocol()?;
    let eve = calibrate_transient_classifier(&params, &config.eve()?, config.attack.n_training, config.master_seed)?;
    let stats = estimate_eve_success(&params, &eve, config.n_periods, config.master_seed)?;
    let cal = eve.calibration.as_ref().expect("calibrated above");
    let (protocol, switching) = match &params {
        ProtocolParams::Kljn(p) => ("kljn", p.switching),
        ProtocolParams::Rrrt(p) => ("rrrt", p.switching),
    };
    let switching = match switching {
        SwitchingMode::Abrupt => "abrupt".to_string(),
        SwitchingMode::SymmetricRamp { ramp_time } => format!("symmetric_ramp({ramp_time:e} s)"),
    };

    let mut r = Report::new(config.experiment);
    r.put("protocol", protocol);
    r.put("switching", &switching);
    r.put("tap_node", eve.tap_node);
    r.put("window_fraction", eve.window_fraction);
    r.put("threshold", format!("{:.6}", cal.threshold));
    r.put("training_separation_sd", format!("{:.4}", cal.separation));
    r.put("training_error", format!("{:.4}", cal.training_error));
    if let Some(w) = &cal.warning {
        r.put("calibration_warning", w);
    }
    r.put("n_secure_bits", stats.n_secure_bits);
    r.put("n_correct", stats.n_correct);
    r.put_p("p", stats.p, stats.ci95);
    r.put("ci_contains_half", stats.ci_contains(0.5));

    let csv = format!(
        "protocol,switching,tap_node,window_fraction,n_secure_bits,n_correct,p,ci_lo,ci_hi,threshold,separation,training_error\n\
         {protocol},{switching},{},{},{},{},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6}\n",
        eve.tap_node,
        eve.window_fraction,
        stats.n_secure_bits,
        stats.n_correct,
        stats.p,
        stats.ci95.0,
        stats.ci95.1,
        cal.threshold,
        cal.separation,
        cal.training_error
    );
    r.files.push((format!("{}.csv", config.experiment.name()), csv));
    Ok(r)
}

fn amplify(config: &ExperimentConfig) -> Result<Report> {
    let stages = config.privacy.stages;
    let mut r = Report::new(config.experiment);
    r.put("stages", stages);
    r.put("slowdown_factor", 1u64 << stages);
    r.put("input_bits", config.n_trials);
    r.put("output_bits", config.n_trials >> stages);
    let mut csv = String::from("p0,stages,n_out,predicted_p,empirical_p,sigma,z,epsilon,mi_leak\n");
    let mut worst_z: f64 = 0.0;
    let mut index = 0u64;
    for &p0 in &config.privacy.p0 {
        for s in 0..=stages {
            let trial = simulate_amplification(p0, s, config.n_trials, derive_seed(config.master_seed, stream::PRIVACY, index))?;
            index += 1;
            let (eps, mi) = leak_metrics(trial.predicted)?;
            let z = if trial.sigma > 0.0 {
                (trial.p_hat - trial.predicted) / trial.sigma
            } else {
                0.0
            };
            worst_z = worst_z.max(z.abs());
            csv.push_str(&format!(
                "{p0},{s},{},{:.9},{:.9},{:.3e},{:.3},{:.6e},{:.6e}\n",
                trial.n_out, trial.predicted, trial.p_hat, trial.sigma, z, eps, mi
            ));
        }
        let p_out = predicted_p_after_stages(p0, stages)?;
        let (eps, mi) = leak_metrics(p_out)?;
        r.put(&format!("p_out[p0={p0}]"), format!("{p_out:.9} (epsilon {eps:.3e}, 1-H2 {mi:.3e} bits/bit)"));
    }
    r.put("max_monte_carlo_deviation_sigma", format!("{worst_z:.3}"));
    r.files.push(("amplify.csv".into(), csv));
    Ok(r)
}

/// Largest adjacent-point difference in `p` in units of the combined binomial
/// standard error.
pub fn max_adjacent_jump(rows: &[ContinuityRow]) -> f64 {
    rows.windows(2)
        .map(|w| {
            let var = |r: &ContinuityRow| r.p * (1.0 - r.p) / r.n as f64;
            let se = (var(&w[0]) + var(&w[1])).sqrt();
            let d = (w[0].p - w[1].p).abs();
            if se == 0.0 {
                if d == 0.0 {
                    0.0
                } else {
                    f64::INFINITY
                }
            } else {
                d / se
            }
        })
        .fold(0.0, f64::max)
}

fn continuity(config: &ExperimentConfig) -> Result<Report> {
    let grid = config.r_e_grid()?;
    let mut full_grid = grid.clone();
    if config.continuity.include_zero {
        full_grid.insert(0, 0.0);
    }
    let mut r = Report::new(config.experiment);
    let mut rows = Vec::new();
    for (mode, g) in [(DcMode::VoltageOnly, &grid), (DcMode::VoltageAndCurrent, &full_grid)] {
        for noise in [false, true] {
            let block = run_continuity_experiment(g, &config.dc_scenario(mode, noise), config.n_trials, config.master_seed)?;
            let tag = format!("{}/{}", mode.name(), if noise { "noise" } else { "noiseless" });
            let p_min = block.iter().map(|x| x.p).fold(1.0, f64::min);
            r.put(&format!("min_p[{tag}]"), format!("{p_min:.4}"));
            r.put(&format!("max_adjacent_jump_sigma[{tag}]"), format!("{:.3}", max_adjacent_jump(&block)));
            rows.extend(block);
        }
    }
    // spread over two decades at the low end of the grid
    let per_decade = config.continuity.points_per_decade;
    if grid.len() > 2 * per_decade {
        let noisy: Vec<&ContinuityRow> = rows
            .iter()
            .filter(|x| x.mode == DcMode::VoltageOnly && x.noise)
            .collect();
        let lo = noisy[0];
        let hi = noisy[2 * per_decade];
        r.put(
            "voltage_only_spread_ratio",
            format!("{:.4} (R_E {:e} vs {:e})", lo.est_std / hi.est_std, lo.r_e, hi.r_e),
        );
    }
    r.put(
        "voltage_only_at_zero",
        match crate::attack::dc_eve_voltage_only(0.0, 0.0, 0.0) {
            Err(Error::Singular(_)) => "singular",
            _ => "invertible",
        },
    );
    r.files.push(("continuity.csv".into(), continuity_csv(&rows)));
    Ok(r)
}

fn psd_check(config: &ExperimentConfig) -> Result<Report> {
    let p = &config.psd;
    let spec = NoiseSpec::white(p.spectral_density, p.bandwidth)?;
    let dt = 1.0 / (p.samples_per_bandwidth * p.bandwidth);
    let n = (p.duration_bandwidth * p.samples_per_bandwidth).round() as usize;
    let mut csv = String::from("record,segment_len,in_band_mean,true_density,rel_error,variance,variance_rel_error\n");
    let mut worst_psd: f64 = 0.0;
    let mut worst_var: f64 = 0.0;
    for j in 0..config.n_trials {
        let sig = generate_band_limited_gaussian(&spec, n, dt, derive_seed(config.master_seed, stream::TRIAL, j as u64))?;
        let psd = crate::signal::estimate_psd(&sig, p.segment_len)?;
        let df = 1.0 / (p.segment_len as f64 * dt);
        let mean = crate::signal::mean_density_in_band(&psd, 2.0 * df, p.bandwidth - 2.0 * df)?;
        let var = mean_square(&sig, 0..n)?;
        let rel = |x: f64, t: f64| if t == 0.0 { x.abs() } else { x / t - 1.0 };
        let e_psd = rel(mean, p.spectral_density);
        let e_var = rel(var, spec.variance());
        worst_psd = worst_psd.max(e_psd.abs());
        worst_var = worst_var.max(e_var.abs());
        csv.push_str(&format!(
            "{j},{},{:.6e},{:.6e},{:.6},{:.6e},{:.6}\n",
            p.segment_len, mean, p.spectral_density, e_psd, var, e_var
        ));
    }
    let mut r = Report::new(config.experiment);
    r.put("records", config.n_trials);
    r.put("samples_per_record", n);
    r.put("max_abs_psd_rel_error", format!("{worst_psd:.5}"));
    r.put("max_abs_variance_rel_error", format!("{worst_var:.5}"));
    r.files.push(("psd-check.csv".into(), csv));
    Ok(r)
}

fn scaling_demo(config: &ExperimentConfig) -> Result<Report> {
    let s = &config.scaling;
    let r_min = s.resistances.iter().copied().fold(f64::INFINITY, f64::min);
    let window = s.window_fraction * r_min * s.capacitance;
    let temperature = config.noise.effective_temperature();
    let mut csv = String::from("R,C,window,mean_abs_slope,ratio_to_first,predicted_ratio\n");
    let mut first = None;
    let mut r = Report::new(config.experiment);
    r.put("window", format!("{window:e}"));
    for &res in &s.resistances {
        let slope = charging_rate_demo(res, s.capacitance, config.noise.bandwidth, temperature, window)?;
        let (r0, s0) = *first.get_or_insert((res, slope));
        let ratio = s0 / slope;
        let predicted = (res / r0).sqrt();
        csv.push_str(&format!(
            "{res:e},{:e},{window:e},{slope:.6e},{ratio:.6},{predicted:.6}\n",
            s.capacitance
        ));
        r.put(&format!("slope_ratio[R={res:e}]"), format!("{ratio:.4} (sqrt law {predicted:.4})"));
    }
    r.files.push(("scaling-demo.csv".into(), csv));
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(kind: ExperimentKind) -> ExperimentConfig {
        ExperimentConfig::defaults(kind)
    }

    #[test]
    fn amplify_report() {
        let mut c = cfg(ExperimentKind::Amplify);
        c.n_trials = 1 << 14;
        let r = run_experiment(&c).unwrap();
        assert_eq!(r.get("slowdown_factor"), Some("16"));
        assert_eq!(r.get("output_bits"), Some("1024"));
        assert!(r.csv().starts_with("p0,stages,"));
        assert_eq!(r.csv().lines().count(), 1 + 5 * 5);
    }

    #[test]
    fn continuity_report() {
        let mut c = cfg(ExperimentKind::Continuity);
        c.n_trials = 500;
        let r = run_experiment(&c).unwrap();
        assert_eq!(r.get("min_p[voltage_and_current/noiseless]"), Some("1.0000"));
        assert_eq!(r.get("voltage_only_at_zero"), Some("singular"));
        // 26 positive points for each voltage-only block, 27 with R_E = 0 otherwise
        assert_eq!(r.csv().lines().count(), 1 + 2 * 26 + 2 * 27);
    }

    #[test]
    fn psd_and_scaling_reports() {
        let mut c = cfg(ExperimentKind::PsdCheck);
        c.n_trials = 2;
        let r = run_experiment(&c).unwrap();
        let worst: f64 = r.get("max_abs_psd_rel_error").unwrap().parse().unwrap();
        assert!(worst < 0.1);
        let r = run_experiment(&cfg(ExperimentKind::ScalingDemo)).unwrap();
        assert_eq!(r.csv().lines().count(), 4);
    }

    #[test]
    fn report_files_are_written() {
        let mut c = cfg(ExperimentKind::ScalingDemo);
        c.output = String::new();
        let r = run_experiment(&c).unwrap();
        let dir = std::env::temp_dir().join(format!("kljn-report-{}", std::process::id()));
        let paths = r.write_to(&dir).unwrap();
        assert_eq!(std::fs::read_to_string(&paths[0]).unwrap(), r.csv());
        std::fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn adjacent_jump_in_sigma_units() {
        let row = |p: f64| ContinuityRow {
            r_e: 1.0,
            mode: DcMode::VoltageOnly,
            noise: true,
            n: 100,
            p,
            ci95: (0.0, 1.0),
            est_std: 0.0,
        };
        let jump = max_adjacent_jump(&[row(0.5), row(0.6)]);
        let se = (0.25f64 / 100.0 + 0.24 / 100.0).sqrt();
        assert!((jump - 0.1 / se).abs() < 1e-9);
        assert_eq!(max_adjacent_jump(&[row(1.0), row(1.0)]), 0.0);
    }
}
