//! Time-domain model of the Alice–cable–Bob loop.
//!
//! The cable is a ladder of `n` nodes. Every node carries a shunt capacitance
//! `c`; consecutive nodes are joined by a series branch `r + l`. Alice drives
//! node 0 through `R_A`, Bob drives node `n - 1` through `R_B`. The network is
//! advanced with the trapezoidal rule written in nodal (companion-model)
//! form, which leaves a symmetric tridiagonal system per step that is
//! factored once per run.

use std::io::Write;

use crate::error::{Error, Result};
use crate::signal::{SampledSignal, BOLTZMANN};

/// Spatially discretised cable.
#[derive(Debug, Clone, PartialEq)]
pub struct CableModel {
    pub n_segments: usize,
    /// Series resistance between adjacent nodes, Ω.
    pub series_resistance: f64,
    /// Series inductance between adjacent nodes, H.
    pub series_inductance: f64,
    /// Shunt capacitance at every node, F.
    pub shunt_capacitance: f64,
    /// Nodes whose voltage is recorded in traces.
    pub tap_nodes: Vec<usize>,
}

impl CableModel {
    /// Zero-impedance wire: a single node without capacitance.
    pub fn ideal() -> Self {
        CableModel {
            n_segments: 1,
            series_resistance: 0.0,
            series_inductance: 0.0,
            shunt_capacitance: 0.0,
            tap_nodes: vec![0],
        }
    }

    /// A single lumped capacitance.
    pub fn lumped(capacitance: f64) -> Self {
        CableModel {
            shunt_capacitance: capacitance,
            ..CableModel::ideal()
        }
    }

    /// Lossless LC ladder with the given one-way propagation delay and
    /// characteristic impedance `sqrt(l/c)`.
    pub fn lc_line(n_segments: usize, delay: f64, impedance: f64) -> Self {
        let per_segment = delay / (n_segments.max(2) - 1) as f64;
        CableModel {
            n_segments,
            series_resistance: 0.0,
            series_inductance: impedance * per_segment,
            shunt_capacitance: per_segment / impedance,
            tap_nodes: default_taps(n_segments),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_segments == 0 {
            return Err(Error::invalid("cable needs n_segments >= 1"));
        }
        for (name, v) in [
            ("series_resistance", self.series_resistance),
            ("series_inductance", self.series_inductance),
            ("shunt_capacitance", self.shunt_capacitance),
        ] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::invalid(format!("cable {name} must be finite and >= 0, got {v}")));
            }
        }
        if self.n_segments > 1 && self.series_resistance == 0.0 && self.series_inductance == 0.0 {
            return Err(Error::invalid(
                "cable with n_segments > 1 needs series resistance or inductance > 0",
            ));
        }
        if let Some(&bad) = self.tap_nodes.iter().find(|&&t| t >= self.n_segments) {
            return Err(Error::invalid(format!(
                "tap node {bad} outside cable with {} nodes",
                self.n_segments
            )));
        }
        Ok(())
    }

    pub fn n_branches(&self) -> usize {
        self.n_segments - 1
    }

    pub fn total_capacitance(&self) -> f64 {
        self.shunt_capacitance * self.n_segments as f64
    }

    /// One-way LC propagation delay along the ladder.
    pub fn propagation_delay(&self) -> f64 {
        self.n_branches() as f64 * (self.series_inductance * self.shunt_capacitance).sqrt()
    }

    pub fn with_all_taps(mut self) -> Self {
        self.tap_nodes = (0..self.n_segments).collect();
        self
    }
}

fn default_taps(n: usize) -> Vec<usize> {
    let mut taps = vec![0, 1.min(n - 1), n - 1];
    taps.dedup();
    taps
}

/// Time-varying amplitude applied to a generator when it is connected.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SwitchingEnvelope {
    /// Full amplitude from the switching instant on.
    Abrupt,
    /// Linear ramp from 0 to 1 over `ramp_time`.
    Ramp { ramp_time: f64 },
}

impl SwitchingEnvelope {
    pub fn value(&self, t: f64) -> f64 {
        match *self {
            SwitchingEnvelope::Abrupt => {
                if t >= 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            SwitchingEnvelope::Ramp { ramp_time } => (t / ramp_time).clamp(0.0, 1.0),
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            SwitchingEnvelope::Abrupt => Ok(()),
            SwitchingEnvelope::Ramp { ramp_time } if ramp_time > 0.0 && ramp_time.is_finite() => Ok(()),
            SwitchingEnvelope::Ramp { ramp_time } => {
                Err(Error::invalid(format!("ramp time must be > 0, got {ramp_time}")))
            }
        }
    }
}

/// Generator voltage in series with a party's resistor.
#[derive(Debug, Clone, PartialEq)]
pub enum Source {
    Off,
    Dc(f64),
    Sampled(SampledSignal),
}

impl Source {
    pub fn value(&self, t: f64) -> f64 {
        match self {
            Source::Off => 0.0,
            Source::Dc(v) => *v,
            Source::Sampled(s) => s.value_at(t),
        }
    }
}

/// Everything the solver needs for one switching period. Time `t = 0` is the
/// switching instant.
#[derive(Debug, Clone, PartialEq)]
pub struct LoopConfig {
    pub r_a: f64,
    pub r_b: f64,
    pub source_a: Source,
    pub source_b: Source,
    pub cable: CableModel,
    pub envelope_a: SwitchingEnvelope,
    pub envelope_b: SwitchingEnvelope,
}

impl LoopConfig {
    pub fn validate(&self) -> Result<()> {
        // an infinite resistance models an open end
        if !(self.r_a > 0.0) || !(self.r_b > 0.0) {
            return Err(Error::invalid(format!(
                "loop resistances must be > 0, got R_A = {}, R_B = {}",
                self.r_a, self.r_b
            )));
        }
        self.cable.validate()?;
        self.envelope_a.validate()?;
        self.envelope_b.validate()
    }

    pub fn drive_a(&self, t: f64) -> f64 {
        self.envelope_a.value(t) * self.source_a.value(t)
    }

    pub fn drive_b(&self, t: f64) -> f64 {
        self.envelope_b.value(t) * self.source_b.value(t)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CircuitState {
    pub node_voltages: Vec<f64>,
    /// Current in each series branch, flowing from node `k` to node `k + 1`.
    pub inductor_currents: Vec<f64>,
}

impl CircuitState {
    pub fn zeros(cable: &CableModel) -> Self {
        CircuitState {
            node_voltages: vec![0.0; cable.n_segments],
            inductor_currents: vec![0.0; cable.n_branches()],
        }
    }

    fn check_dims(&self, cable: &CableModel) -> Result<()> {
        if self.node_voltages.len() != cable.n_segments
            || self.inductor_currents.len() != cable.n_branches()
        {
            return Err(Error::invalid(format!(
                "state has {} nodes / {} branches, cable needs {} / {}",
                self.node_voltages.len(),
                self.inductor_currents.len(),
                cable.n_segments,
                cable.n_branches()
            )));
        }
        Ok(())
    }

    /// Energy held in the cable's capacitances and inductances, J.
    pub fn stored_energy(&self, cable: &CableModel) -> f64 {
        let e_c: f64 = self.node_voltages.iter().map(|v| v * v).sum::<f64>() * cable.shunt_capacitance;
        let e_l: f64 = self.inductor_currents.iter().map(|i| i * i).sum::<f64>() * cable.series_inductance;
        0.5 * (e_c + e_l)
    }
}

/// Recorded node voltages at the cable taps and the loop current entering the
/// cable from Alice's side. Sample `j` is taken at `t0 + j·dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub dt: f64,
    pub t0: f64,
    pub taps: Vec<usize>,
    pub voltages: Vec<Vec<f64>>,
    pub entry_current: Vec<f64>,
}

impl Trace {
    fn empty(dt: f64, t0: f64, taps: &[usize]) -> Self {
        Trace {
            dt,
            t0,
            taps: taps.to_vec(),
            voltages: vec![Vec::new(); taps.len()],
            entry_current: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.entry_current.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entry_current.is_empty()
    }

    pub fn duration(&self) -> f64 {
        self.len() as f64 * self.dt
    }

    pub fn tap(&self, node: usize) -> Option<&[f64]> {
        self.taps
            .iter()
            .position(|&t| t == node)
            .map(|i| self.voltages[i].as_slice())
    }

    pub fn voltage_signal(&self, node: usize) -> Result<SampledSignal> {
        let v = self
            .tap(node)
            .ok_or_else(|| Error::invalid(format!("node {node} is not a recorded tap")))?;
        SampledSignal::new(v.to_vec(), self.dt)
    }

    pub fn current_signal(&self) -> Result<SampledSignal> {
        SampledSignal::new(self.entry_current.clone(), self.dt)
    }

    /// Writes `t,node_<k>...,I_entry` rows.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        write!(out, "t")?;
        for tap in &self.taps {
            write!(out, ",node_{tap}")?;
        }
        writeln!(out, ",I_entry")?;
        for j in 0..self.len() {
            write!(out, "{:e}", self.t0 + j as f64 * self.dt)?;
            for v in &self.voltages {
                write!(out, ",{:e}", v[j])?;
            }
            writeln!(out, ",{:e}", self.entry_current[j])?;
        }
        Ok(())
    }
}

/// Prefactored trapezoidal integrator for one `(LoopConfig, dt)` pair.
struct LadderSolver<'a> {
    config: &'a LoopConfig,
    dt: f64,
    g_cap: f64,
    g_branch: f64,
    /// History coefficient `2l/dt - r` of the inductive branch companion model.
    branch_history: f64,
    inductive: bool,
    g_a: f64,
    g_b: f64,
    // Thomas-algorithm factors
    c_prime: Vec<f64>,
    inv_denom: Vec<f64>,
    rhs: Vec<f64>,
    history: Vec<f64>,
}

impl<'a> LadderSolver<'a> {
    fn new(config: &'a LoopConfig, dt: f64) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::invalid(format!("time step must be > 0, got {dt}")));
        }
        config.validate()?;
        let cable = &config.cable;
        let n = cable.n_segments;
        let g_cap = 2.0 * cable.shunt_capacitance / dt;
        let inductive = cable.series_inductance > 0.0;
        let (g_branch, branch_history) = if n == 1 {
            (0.0, 0.0)
        } else if inductive {
            let z = 2.0 * cable.series_inductance / dt + cable.series_resistance;
            (1.0 / z, 2.0 * cable.series_inductance / dt - cable.series_resistance)
        } else {
            (1.0 / cable.series_resistance, 0.0)
        };
        let g_a = 1.0 / config.r_a;
        let g_b = 1.0 / config.r_b;

        let mut diag = vec![g_cap; n];
        for k in 0..n {
            if k > 0 {
                diag[k] += g_branch;
            }
            if k + 1 < n {
                diag[k] += g_branch;
            }
        }
        diag[0] += g_a;
        diag[n - 1] += g_b;

        let off = -g_branch;
        let mut c_prime = vec![0.0; n];
        let mut inv_denom = vec![0.0; n];
        for k in 0..n {
            let denom = if k == 0 { diag[0] } else { diag[k] - off * c_prime[k - 1] };
            if denom.abs() < f64::MIN_POSITIVE || !denom.is_finite() {
                return Err(Error::Singular(
                    "nodal matrix is singular (floating node without capacitance)".into(),
                ));
            }
            inv_denom[k] = 1.0 / denom;
            c_prime[k] = off * inv_denom[k];
        }

        Ok(LadderSolver {
            config,
            dt,
            g_cap,
            g_branch,
            branch_history,
            inductive,
            g_a,
            g_b,
            c_prime,
            inv_denom,
            rhs: vec![0.0; n],
            history: vec![0.0; n.saturating_sub(1)],
        })
    }

    /// Advances `state` from `t` to `t + dt` in place.
    fn advance(&mut self, state: &mut CircuitState, t: f64) -> Result<()> {
        let n = self.config.cable.n_segments;
        let v = &mut state.node_voltages;
        let i_br = &mut state.inductor_currents;
        let e_a_now = self.config.drive_a(t);
        let e_b_now = self.config.drive_b(t);
        let e_a_next = self.config.drive_a(t + self.dt);
        let e_b_next = self.config.drive_b(t + self.dt);

        for k in 0..n.saturating_sub(1) {
            self.history[k] = if self.inductive {
                self.g_branch * ((v[k] - v[k + 1]) + self.branch_history * i_br[k])
            } else {
                0.0
            };
        }

        for k in 0..n {
            let mut r = 0.0;
            if self.g_cap > 0.0 {
                // capacitor current at t from KCL
                let mut i_cap = 0.0;
                if k > 0 {
                    i_cap += i_br[k - 1];
                }
                if k + 1 < n {
                    i_cap -= i_br[k];
                }
                if k == 0 {
                    i_cap += (e_a_now - v[0]) * self.g_a;
                }
                if k == n - 1 {
                    i_cap += (e_b_now - v[n - 1]) * self.g_b;
                }
                r += self.g_cap * v[k] + i_cap;
            }
            if k > 0 {
                r += self.history[k - 1];
            }
            if k + 1 < n {
                r -= self.history[k];
            }
            if k == 0 {
                r += e_a_next * self.g_a;
            }
            if k == n - 1 {
                r += e_b_next * self.g_b;
            }
            self.rhs[k] = r;
        }

        // forward sweep then back substitution
        let off = -self.g_branch;
        self.rhs[0] *= self.inv_denom[0];
        for k in 1..n {
            self.rhs[k] = (self.rhs[k] - off * self.rhs[k - 1]) * self.inv_denom[k];
        }
        for k in (0..n - 1).rev() {
            self.rhs[k] -= self.c_prime[k] * self.rhs[k + 1];
        }
        v.copy_from_slice(&self.rhs);

        for k in 0..n.saturating_sub(1) {
            i_br[k] = self.g_branch * (v[k] - v[k + 1]) + self.history[k];
        }

        if v.iter().chain(i_br.iter()).any(|x| !x.is_finite()) {
            return Err(Error::SolverDivergence { t: t + self.dt });
        }
        Ok(())
    }

    fn entry_current(&self, state: &CircuitState, t: f64) -> f64 {
        (self.config.drive_a(t) - state.node_voltages[0]) * self.g_a
    }
}

/// Advances the loop by a single trapezoidal step from `t` to `t + dt`.
pub fn step(state: &CircuitState, config: &LoopConfig, t: f64, dt: f64) -> Result<CircuitState> {
    state.check_dims(&config.cable)?;
    let mut solver = LadderSolver::new(config, dt)?;
    let mut next = state.clone();
    solver.advance(&mut next, t)?;
    Ok(next)
}

/// Simulates `duration` seconds from the switching instant.
///
/// The trace holds `steps + 1` samples (the initial state included) or is
/// empty when the duration rounds to zero steps. The returned state is meant
/// to be carried into the next period.
pub fn simulate_period(
    config: &LoopConfig,
    duration: f64,
    dt: f64,
    initial: &CircuitState,
) -> Result<(Trace, CircuitState)> {
    simulate_span(config, 0.0, duration, dt, initial)
}

/// Like [`simulate_period`] but starting at time `t_start` after the
/// switching instant.
pub fn simulate_span(
    config: &LoopConfig,
    t_start: f64,
    duration: f64,
    dt: f64,
    initial: &CircuitState,
) -> Result<(Trace, CircuitState)> {
    initial.check_dims(&config.cable)?;
    if !(duration >= 0.0) {
        return Err(Error::invalid(format!("duration must be >= 0, got {duration}")));
    }
    let mut solver = LadderSolver::new(config, dt)?;
    let taps = &config.cable.tap_nodes;
    let steps = (duration / dt).round() as usize;
    let mut trace = Trace::empty(dt, t_start, taps);
    let mut state = initial.clone();
    if steps == 0 {
        return Ok((trace, state));
    }

    let record = |trace: &mut Trace, state: &CircuitState, current: f64| {
        for (slot, &node) in trace.voltages.iter_mut().zip(taps) {
            slot.push(state.node_voltages[node]);
        }
        trace.entry_current.push(current);
    };
    for v in trace.voltages.iter_mut() {
        v.reserve(steps + 1);
    }
    trace.entry_current.reserve(steps + 1);

    record(&mut trace, &state, solver.entry_current(&state, t_start));
    for j in 0..steps {
        let t = t_start + j as f64 * dt;
        solver.advance(&mut state, t)?;
        let i = solver.entry_current(&state, t + dt);
        record(&mut trace, &state, i);
    }
    Ok((trace, state))
}

/// Voltage and current noise spectra on an ideal wire.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectraPair {
    /// V²/Hz
    pub s_u: f64,
    /// A²/Hz
    pub s_i: f64,
}

/// Steady-state wire spectra for generators `4kT_A R_A` and `4kT_B R_B`
/// joined by a zero-impedance wire.
pub fn analytic_loop_spectra(r_a: f64, t_a: f64, r_b: f64, t_b: f64) -> Result<SpectraPair> {
    if !(r_a > 0.0) || !(r_b > 0.0) {
        return Err(Error::invalid(format!(
            "loop resistances must be > 0, got R_A = {r_a}, R_B = {r_b}"
        )));
    }
    if !(t_a >= 0.0) || !(t_b >= 0.0) {
        return Err(Error::invalid("temperatures must be >= 0"));
    }
    let sum = r_a + r_b;
    let s2 = sum * sum;
    let four_k = 4.0 * BOLTZMANN;
    Ok(SpectraPair {
        s_i: four_k * (t_a * r_a + t_b * r_b) / s2,
        s_u: four_k * (t_a * r_a * r_b * r_b + t_b * r_b * r_a * r_a) / s2,
    })
}

/// Mean `|dU/dt|` at the cable entry while a lumped capacitance `C` charges
/// through `R` toward the noise-scale level `sqrt(4kT·R·B)`, measured over
/// `window` seconds after an abrupt switch from a discharged cable.
pub fn charging_rate_demo(
    resistance: f64,
    capacitance: f64,
    bandwidth: f64,
    temperature: f64,
    window: f64,
) -> Result<f64> {
    if !(resistance > 0.0) || !(capacitance > 0.0) || !(bandwidth > 0.0) || !(temperature >= 0.0) {
        return Err(Error::invalid("charging demo needs R, C, B > 0 and T >= 0"));
    }
    let tau = resistance * capacitance;
    if !(window > 0.0) || window > 0.1 * tau * (1.0 + 1e-12) {
        return Err(Error::invalid(format!(
            "window {window} s outside the early-transient regime (0, 0.1·RC = {} s]",
            0.1 * tau
        )));
    }
    let level = (4.0 * BOLTZMANN * temperature * resistance * bandwidth).sqrt();
    let config = LoopConfig {
        r_a: resistance,
        r_b: f64::INFINITY,
        source_a: Source::Dc(level),
        source_b: Source::Off,
        cable: CableModel::lumped(capacitance),
        envelope_a: SwitchingEnvelope::Abrupt,
        envelope_b: SwitchingEnvelope::Abrupt,
    };
    let steps = 1000;
    let dt = window / steps as f64;
    let (trace, _) = simulate_period(&config, window, dt, &CircuitState::zeros(&config.cable))?;
    let v = trace.tap(0).expect("node 0 is always recorded");
    let total: f64 = v.windows(2).map(|w| (w[1] - w[0]).abs() / dt).sum();
    Ok(total / (v.len() - 1) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dc_config(cable: CableModel, u0: f64, r_a: f64, r_b: f64) -> LoopConfig {
        LoopConfig {
            r_a,
            r_b,
            source_a: Source::Dc(u0),
            source_b: Source::Off,
            cable,
            envelope_a: SwitchingEnvelope::Abrupt,
            envelope_b: SwitchingEnvelope::Abrupt,
        }
    }

    #[test]
    fn quiet_loop_stays_at_rest() {
        let cable = CableModel::lc_line(8, 1e-5, 100.0);
        let config = LoopConfig {
            source_a: Source::Off,
            ..dc_config(cable.clone(), 0.0, 1e3, 1e3)
        };
        let (trace, end) = simulate_period(&config, 1e-4, 1e-7, &CircuitState::zeros(&cable)).unwrap();
        assert_eq!(end, CircuitState::zeros(&cable));
        assert!(trace.entry_current.iter().all(|&i| i == 0.0));
    }

    #[test]
    fn rc_charging_reaches_divider_level() {
        // analytic: V(t) = U0·R_B/(R_A+R_B)·(1 - exp(-t/τ)), τ = (R_A∥R_B)·C
        let (u0, r_a, r_b, c) = (2.0, 1e3, 3e3, 1e-6);
        let config = dc_config(CableModel::lumped(c), u0, r_a, r_b);
        let tau = r_a * r_b / (r_a + r_b) * c;
        let (trace, end) =
            simulate_period(&config, 10.0 * r_a * c, tau / 200.0, &CircuitState::zeros(&config.cable)).unwrap();
        let target = u0 * r_b / (r_a + r_b);
        assert!((end.node_voltages[0] - target).abs() < 1e-3 * target);
        // mid-transient sample against the closed form
        let j = 200;
        let t = j as f64 * trace.dt;
        let exact = target * (1.0 - (-t / tau).exp());
        assert!((trace.tap(0).unwrap()[j] - exact).abs() < 1e-4 * target);
    }

    #[test]
    fn zero_duration_is_a_no_op() {
        let config = dc_config(CableModel::lumped(1e-9), 1.0, 1e3, 1e3);
        let init = CircuitState {
            node_voltages: vec![0.3],
            inductor_currents: vec![],
        };
        let (trace, end) = simulate_period(&config, 0.0, 1e-6, &init).unwrap();
        assert!(trace.is_empty());
        assert_eq!(end, init);
    }

    #[test]
    fn free_ladder_energy_never_grows() {
        let cable = CableModel::lc_line(16, 2e-5, 200.0);
        let config = LoopConfig {
            source_a: Source::Off,
            ..dc_config(cable.clone(), 0.0, 500.0, 5e3)
        };
        let mut state = CircuitState {
            node_voltages: (0..16).map(|k| (k as f64 * 0.7).sin()).collect(),
            inductor_currents: (0..15).map(|k| 1e-3 * (k as f64 * 1.3).cos()).collect(),
        };
        let mut energy = state.stored_energy(&cable);
        for j in 0..2000 {
            state = step(&state, &config, j as f64 * 1e-7, 1e-7).unwrap();
            let e = state.stored_energy(&cable);
            assert!(e <= energy * (1.0 + 1e-12), "energy grew at step {j}");
            energy = e;
        }
    }

    #[test]
    fn stored_energy_bounded_by_delivered_energy() {
        let cable = CableModel::lc_line(12, 1e-5, 300.0);
        let u0 = 1.5;
        let config = dc_config(cable.clone(), u0, 2e3, 8e3);
        let dt = 5e-8;
        let (trace, end) = simulate_period(&config, 2e-4, dt, &CircuitState::zeros(&cable)).unwrap();
        let delivered: f64 = trace
            .entry_current
            .windows(2)
            .map(|w| 0.5 * (w[0] + w[1]) * u0 * dt)
            .sum();
        assert!(end.stored_energy(&cable) <= delivered);
    }

    #[test]
    fn halving_the_step_barely_moves_samples() {
        let cable = CableModel::lc_line(8, 1e-5, 300.0);
        let config = dc_config(cable.clone(), 1.0, 1e3, 1e4);
        let (coarse, _) = simulate_period(&config, 1e-4, 2e-7, &CircuitState::zeros(&cable)).unwrap();
        let (fine, _) = simulate_period(&config, 1e-4, 1e-7, &CircuitState::zeros(&cable)).unwrap();
        let a = coarse.tap(0).unwrap();
        let b = fine.tap(0).unwrap();
        let scale = b.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        for j in (100..a.len()).step_by(50) {
            assert!((a[j] - b[2 * j]).abs() < 0.01 * scale, "sample {j}");
        }
    }

    #[test]
    fn analytic_spectra_reproduce_loop_resistance() {
        let t = 300.0;
        for (r_a, r_b) in [(1e3, 1e4), (47.0, 2.2e5), (5e3, 5e3)] {
            let s = analytic_loop_spectra(r_a, t, r_b, t).unwrap();
            let r_loop = 4.0 * BOLTZMANN * t / s.s_i;
            assert!((r_loop - (r_a + r_b)).abs() < 1e-9 * (r_a + r_b));
        }
    }

    #[test]
    fn analytic_spectra_are_swap_symmetric() {
        let a = analytic_loop_spectra(1e3, 350.0, 9e3, 120.0).unwrap();
        let b = analytic_loop_spectra(9e3, 120.0, 1e3, 350.0).unwrap();
        assert!((a.s_u - b.s_u).abs() <= 1e-15 * a.s_u);
        assert!((a.s_i - b.s_i).abs() <= 1e-15 * a.s_i);
        let zero = analytic_loop_spectra(1e3, 0.0, 2e3, 0.0).unwrap();
        assert_eq!((zero.s_u, zero.s_i), (0.0, 0.0));
        assert!(analytic_loop_spectra(0.0, 1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn charging_slope_scales_inverse_sqrt_r() {
        let (c, b, t) = (1e-7, 1e3, 1e15);
        let r = 1e3;
        let window = 0.1 * r * c;
        let s1 = charging_rate_demo(r, c, b, t, window).unwrap();
        let s4 = charging_rate_demo(4.0 * r, c, b, t, window).unwrap();
        assert!((s1 / s4 - 2.0).abs() < 0.2, "ratio {}", s1 / s4);
        // doubling C halves the slope: U∞/(RC)
        let s1c = charging_rate_demo(r, 2.0 * c, b, t, window).unwrap();
        assert!((s1 / s1c - 2.0).abs() < 0.2);
        assert_eq!(charging_rate_demo(r, c, b, 0.0, window).unwrap(), 0.0);
        assert!(charging_rate_demo(r, c, b, t, 0.2 * r * c).is_err());
    }

    #[test]
    fn cable_validation() {
        let mut cable = CableModel::lc_line(4, 1e-6, 50.0);
        assert!(cable.validate().is_ok());
        cable.series_inductance = 0.0;
        assert!(cable.validate().is_err());
        cable.series_resistance = 1.0;
        assert!(cable.validate().is_ok());
        cable.tap_nodes = vec![4];
        assert!(cable.validate().is_err());
        assert!(CableModel { n_segments: 0, ..CableModel::ideal() }.validate().is_err());
    }

    #[test]
    fn trace_csv_layout() {
        let config = dc_config(CableModel::lc_line(3, 1e-6, 50.0).with_all_taps(), 1.0, 50.0, 50.0);
        let (trace, _) =
            simulate_period(&config, 3e-7, 1e-7, &CircuitState::zeros(&config.cable)).unwrap();
        let mut buf = Vec::new();
        trace.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "t,node_0,node_1,node_2,I_entry");
        assert_eq!(lines.count(), 4);
    }
}
