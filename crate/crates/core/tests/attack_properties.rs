//! Transient attack behaviour on reduced but realistic configurations.

use std::sync::OnceLock;

use kljn_core::attack::{calibrate_transient_classifier, estimate_eve_success, AttackStats, EveConfig, ProtocolParams};
use kljn_core::config::{ExperimentConfig, ExperimentKind};

const N_TRAINING: usize = 150;
const N_PERIODS: usize = 1200;

fn kljn(temperature_scale: f64) -> ProtocolParams {
    let mut cfg = ExperimentConfig::defaults(ExperimentKind::AttackTransient);
    cfg.noise.temperature *= temperature_scale;
    cfg.attacked_protocol().unwrap()
}

fn eve(window_fraction: f64) -> EveConfig {
    EveConfig { window_fraction, ..ExperimentConfig::defaults(ExperimentKind::AttackTransient).eve().unwrap() }
}

fn run(params: &ProtocolParams, eve: &EveConfig, seed: u64) -> (EveConfig, AttackStats) {
    let trained = calibrate_transient_classifier(params, eve, N_TRAINING, seed).unwrap();
    let stats = estimate_eve_success(params, &trained, N_PERIODS, seed).unwrap();
    (trained, stats)
}

fn baseline() -> &'static (EveConfig, AttackStats) {
    static BASE: OnceLock<(EveConfig, AttackStats)> = OnceLock::new();
    BASE.get_or_init(|| run(&kljn(1.0), &eve(0.1), 5))
}

#[test]
fn undefended_kljn_leaks() {
    let (trained, s) = baseline();
    assert!(s.p > 0.6 && !s.ci_contains(0.5), "p = {}", s.p);
    assert!(trained.calibration.as_ref().unwrap().separation > 0.5);
}

#[test]
fn temperature_scale_does_not_matter_after_recalibration() {
    let (_, base) = baseline();
    let (_, hot) = run(&kljn(10.0), &eve(0.1), 5);
    assert_eq!(hot.n_secure_bits, base.n_secure_bits);
    assert!(hot.n_correct.abs_diff(base.n_correct) <= 2, "{} vs {}", hot.n_correct, base.n_correct);
}

#[test]
fn full_correlation_time_window_degrades_toward_chance() {
    let (_, base) = baseline();
    let (_, wide) = run(&kljn(1.0), &eve(1.0), 5);
    assert!((wide.p - 0.5).abs() < base.p - 0.5, "wide {} vs narrow {}", wide.p, base.p);
    assert!((wide.p - 0.5).abs() < 0.05, "wide window p = {}", wide.p);
}

#[test]
fn calibration_is_reproducible() {
    let (trained, _) = baseline();
    let again = calibrate_transient_classifier(&kljn(1.0), &eve(0.1), N_TRAINING, 5).unwrap();
    assert_eq!(again.calibration, trained.calibration);
}

#[test]
fn rrrt_classes_do_not_separate() {
    let cfg = ExperimentConfig::defaults(ExperimentKind::DefendRrrt);
    let trained = calibrate_transient_classifier(&cfg.attacked_protocol().unwrap(), &cfg.eve().unwrap(), 300, 9).unwrap();
    let cal = trained.calibration.unwrap();
    assert!(cal.separation < 0.2, "separation {}", cal.separation);
    assert!(cal.warning.is_some());
}
