//! Simulated wire spectra against the two-generator Thevenin formula.

use kljn_core::circuit::{analytic_loop_spectra, simulate_period, CableModel, CircuitState, LoopConfig, Source, SwitchingEnvelope};
use kljn_core::protocol::mean_in_band_density;
use kljn_core::signal::{generate_band_limited_gaussian, NoiseSpec};

const K: f64 = 1.380649e-23;
const B: f64 = 1e3;

/// Thevenin oracle: i = (v_a − v_b)/(R_a+R_b), u = (v_a·R_b + v_b·R_a)/(R_a+R_b).
fn expected(r_a: f64, t_a: f64, r_b: f64, t_b: f64) -> (f64, f64) {
    let (s_a, s_b) = (4.0 * K * t_a * r_a, 4.0 * K * t_b * r_b);
    let sum2 = (r_a + r_b).powi(2);
    ((s_a * r_b * r_b + s_b * r_a * r_a) / sum2, (s_a + s_b) / sum2)
}

fn simulated(r_a: f64, t_a: f64, r_b: f64, t_b: f64, bt: f64, seed: u64) -> (f64, f64) {
    let dt = 1.0 / (100.0 * B);
    let duration = bt / B;
    let n = (duration / dt).round() as usize + 2;
    let gen = |t, r, s| Source::Sampled(generate_band_limited_gaussian(&NoiseSpec::johnson(t, r, B).unwrap(), n, dt, s).unwrap());
    let cable = CableModel::ideal();
    let config = LoopConfig {
        r_a,
        r_b,
        source_a: gen(t_a, r_a, seed),
        source_b: gen(t_b, r_b, seed + 1),
        envelope_a: SwitchingEnvelope::Abrupt,
        envelope_b: SwitchingEnvelope::Abrupt,
        cable: cable.clone(),
    };
    let (trace, _) = simulate_period(&config, duration, dt, &CircuitState::zeros(&cable)).unwrap();
    (
        mean_in_band_density(&trace.voltage_signal(0).unwrap(), B).unwrap(),
        mean_in_band_density(&trace.current_signal().unwrap(), B).unwrap(),
    )
}

fn check(r_a: f64, t_a: f64, r_b: f64, t_b: f64, seed: u64) {
    let (su, si) = expected(r_a, t_a, r_b, t_b);
    let lib = analytic_loop_spectra(r_a, t_a, r_b, t_b).unwrap();
    assert!((lib.s_u / su - 1.0).abs() < 1e-12 && (lib.s_i / si - 1.0).abs() < 1e-12);
    let (mu, mi) = simulated(r_a, t_a, r_b, t_b, 1e4, seed);
    assert!((mu / su - 1.0).abs() < 0.10, "S_u {mu:e} vs {su:e}");
    assert!((mi / si - 1.0).abs() < 0.10, "S_i {mi:e} vs {si:e}");
}

#[test]
fn equal_resistors_single_node() {
    check(1e3, 1e18, 1e3, 1e18, 11);
}

#[test]
fn unequal_resistors_equal_temperature() {
    check(1e3, 1e18, 1e5, 1e18, 21);
    check(1e5, 1e18, 1e3, 1e18, 31);
}

#[test]
fn unequal_temperatures() {
    check(2e3, 1e18, 5e3, 3e18, 41);
}

#[test]
fn johnson_formula_closes_the_loop() {
    // 4kT/S_i recovers R_A + R_B when both ends share T
    for (r_a, r_b) in [(1e3, 1e4), (3e3, 3e3), (1e2, 1e6)] {
        let s = analytic_loop_spectra(r_a, 300.0, r_b, 300.0).unwrap();
        assert!((4.0 * K * 300.0 / s.s_i / (r_a + r_b) - 1.0).abs() < 1e-12);
    }
}
