//! Fixed-step closed-loop simulation with per-step constraint monitoring.
//!
//! The integrator is classical fourth-order Runge-Kutta with the input held
//! constant over each step. A fixed small step is used throughout because
//! the supervisor switches the right-hand side discontinuously, which
//! adaptive integrators handle poorly; the step size also bounds how far the
//! barrier value can overshoot a threshold between samples.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use nalgebra::{ComplexField, DVector};
use thiserror::Error;

use crate::barrier::MinQuadraticBarrier;
use crate::plant::{saturate_input, Pendulum, Plant};
use crate::supervisor::{Supervisor, SupervisorMode};

/// Default simulation step (seconds).
pub const DEFAULT_STEP: f64 = 1e-3;

/// States whose norm exceeds this are treated as diverged.
pub const SANITY_RADIUS: f64 = 1e6;

/// Slack added to constraint bounds before counting a violation, so exact
/// boundary contact after saturation does not trip the monitor.
pub const VIOLATION_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum SimError {
    #[error("state diverged (non-finite or norm beyond {SANITY_RADIUS:.0e})")]
    NonFinite,
    #[error("initial min-barrier value {barrier:.6} is above eps_lo = {eps_lo:.6}")]
    StartOutsideSafeSet { barrier: f64, eps_lo: f64 },
    #[error("step and horizon must be positive with horizon >= step")]
    BadTiming,
}

/// One RK4 step of `xdot = f(x) + g(x) u` with `u` held constant.
pub fn integrate_step(
    plant: &dyn Plant,
    x: &DVector<f64>,
    u: &DVector<f64>,
    h: f64,
) -> Result<DVector<f64>, SimError> {
    assert!(h > 0.0, "step must be positive");
    let k1 = plant.dynamics(x, u);
    let k2 = plant.dynamics(&(x + &k1 * (h / 2.0)), u);
    let k3 = plant.dynamics(&(x + &k2 * (h / 2.0)), u);
    let k4 = plant.dynamics(&(x + &k3 * h), u);
    let next = x + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
    if !next.iter().all(|v| v.is_finite()) || next.norm() > SANITY_RADIUS {
        return Err(SimError::NonFinite);
    }
    Ok(next)
}

/// Piecewise-linear scalar reference defined by `(time, value)` knots.
///
/// The value holds constant before the first and after the last knot; a
/// steep segment between two nearby knots acts as a step.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceSignal {
    knots: Vec<(f64, f64)>,
}

impl ReferenceSignal {
    /// Knot times must be strictly increasing.
    pub fn new(knots: Vec<(f64, f64)>) -> Option<Self> {
        if knots.is_empty() || knots.windows(2).any(|w| w[1].0 <= w[0].0) {
            return None;
        }
        Some(Self { knots })
    }

    pub fn constant(value: f64) -> Self {
        Self {
            knots: alloc::vec![(0.0, value)],
        }
    }

    pub fn knots(&self) -> &[(f64, f64)] {
        &self.knots
    }

    pub fn value(&self, t: f64) -> f64 {
        let first = self.knots[0];
        if t <= first.0 {
            return first.1;
        }
        for w in self.knots.windows(2) {
            let (t0, v0) = w[0];
            let (t1, v1) = w[1];
            if t <= t1 {
                return v0 + (v1 - v0) * (t - t0) / (t1 - t0);
            }
        }
        self.knots[self.knots.len() - 1].1
    }
}

/// Proportional-derivative gains for the reference tracker.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackingGains {
    pub k_p: f64,
    pub k_d: f64,
}

impl Default for TrackingGains {
    fn default() -> Self {
        Self {
            k_p: 25.0,
            k_d: 10.0,
        }
    }
}

/// Feedback-linearizing position tracker for the pendulum.
///
/// `tau = m l^2 (k_p (r - theta) - k_d theta_dot) - m g l sin(theta)`,
/// returned unsaturated: the supervisor and the plant-side saturation deal
/// with limits.
pub fn tracking_control_pendulum(
    pendulum: &Pendulum,
    x: &DVector<f64>,
    r: f64,
    gains: TrackingGains,
) -> DVector<f64> {
    let accel = gains.k_p * (r - x[0]) - gains.k_d * x[1];
    let tau = pendulum.inertia() * accel - pendulum.gravity_torque() * ComplexField::sin(x[0]);
    DVector::from_row_slice(&[tau])
}

/// A closed-loop run description: reference, start state, and timing.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub reference: ReferenceSignal,
    pub initial_state: DVector<f64>,
    pub horizon: f64,
    pub step: f64,
}

impl Scenario {
    pub fn new(
        name: &str,
        reference: ReferenceSignal,
        initial_state: DVector<f64>,
        horizon: f64,
        step: f64,
    ) -> Result<Self, SimError> {
        if !(step > 0.0 && horizon >= step) {
            return Err(SimError::BadTiming);
        }
        Ok(Self {
            name: String::from(name),
            reference,
            initial_state,
            horizon,
            step,
        })
    }
}

/// Time-indexed record of everything the plots and monitors need.
#[derive(Debug, Clone, Default)]
pub struct Trajectory {
    times: Vec<f64>,
    states: Vec<DVector<f64>>,
    u_requested: Vec<DVector<f64>>,
    u_applied: Vec<DVector<f64>>,
    barrier_values: Vec<f64>,
    modes: Vec<SupervisorMode>,
}

impl Trajectory {
    pub fn with_capacity(steps: usize) -> Self {
        Self {
            times: Vec::with_capacity(steps),
            states: Vec::with_capacity(steps),
            u_requested: Vec::with_capacity(steps),
            u_applied: Vec::with_capacity(steps),
            barrier_values: Vec::with_capacity(steps),
            modes: Vec::with_capacity(steps),
        }
    }

    #[allow(clippy::too_many_arguments)]
    pub fn push(
        &mut self,
        t: f64,
        state: DVector<f64>,
        u_requested: DVector<f64>,
        u_applied: DVector<f64>,
        barrier: f64,
        mode: SupervisorMode,
    ) {
        self.times.push(t);
        self.states.push(state);
        self.u_requested.push(u_requested);
        self.u_applied.push(u_applied);
        self.barrier_values.push(barrier);
        self.modes.push(mode);
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn states(&self) -> &[DVector<f64>] {
        &self.states
    }

    pub fn u_requested(&self) -> &[DVector<f64>] {
        &self.u_requested
    }

    pub fn u_applied(&self) -> &[DVector<f64>] {
        &self.u_applied
    }

    pub fn barrier_values(&self) -> &[f64] {
        &self.barrier_values
    }

    pub fn modes(&self) -> &[SupervisorMode] {
        &self.modes
    }

    pub fn active_indices(&self) -> impl Iterator<Item = Option<usize>> + '_ {
        self.modes.iter().map(|m| m.active_index())
    }

    /// Number of Transparent/Safety edges along the run.
    pub fn mode_switches(&self) -> usize {
        self.modes
            .windows(2)
            .filter(|w| w[0].is_safety() != w[1].is_safety())
            .count()
    }

    /// Componentwise maximum of `|x_i|` over the run.
    pub fn max_abs_state(&self) -> Vec<f64> {
        let n = self.states.first().map_or(0, |s| s.len());
        let mut out = alloc::vec![0.0; n];
        for s in &self.states {
            for i in 0..n {
                if s[i].abs() > out[i] {
                    out[i] = s[i].abs();
                }
            }
        }
        out
    }

    /// Maximum of `|u_i|` over the applied inputs.
    pub fn max_abs_input(&self) -> Vec<f64> {
        let m = self.u_applied.first().map_or(0, |u| u.len());
        let mut out = alloc::vec![0.0; m];
        for u in &self.u_applied {
            for i in 0..m {
                if u[i].abs() > out[i] {
                    out[i] = u[i].abs();
                }
            }
        }
        out
    }
}

/// First constraint violation seen by the monitor.
#[derive(Debug, Clone, PartialEq)]
pub struct ViolationEvent {
    pub step: usize,
    pub time: f64,
    pub label: String,
}

/// Per-run tally of constraint violations.
///
/// `state` and `input` count steps where the *applied* signals leave X or U;
/// `requested_input` counts steps where only the request was out of range
/// (logged, not fatal: the plant saturates physically).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ViolationReport {
    pub state: usize,
    pub input: usize,
    pub requested_input: usize,
    pub first: Option<ViolationEvent>,
}

impl ViolationReport {
    pub fn is_clean(&self) -> bool {
        self.state == 0 && self.input == 0
    }

    fn check(
        &mut self,
        step: usize,
        time: f64,
        plant: &dyn Plant,
        x: &DVector<f64>,
        u_applied: &DVector<f64>,
        u_requested: &DVector<f64>,
    ) {
        let note = |counter: &mut usize, first: &mut Option<ViolationEvent>, label: String| {
            *counter += 1;
            if first.is_none() {
                *first = Some(ViolationEvent { step, time, label });
            }
        };
        if let Some(i) = plant
            .state_rows()
            .iter()
            .position(|row| row.slack(x) < -VIOLATION_TOL)
        {
            note(
                &mut self.state,
                &mut self.first,
                format!("state row {i} at t={time:.4}"),
            );
        }
        if let Some(i) = plant
            .input_rows()
            .iter()
            .position(|row| row.slack(u_applied) < -VIOLATION_TOL)
        {
            note(
                &mut self.input,
                &mut self.first,
                format!("input row {i} at t={time:.4}"),
            );
        }
        if plant
            .input_rows()
            .iter()
            .any(|row| row.slack(u_requested) < -VIOLATION_TOL)
        {
            self.requested_input += 1;
        }
    }
}

/// Result of a supervised tracking run.
#[derive(Debug, Clone)]
pub struct ScenarioResult {
    pub trajectory: Trajectory,
    pub violations: ViolationReport,
    pub mode_switches: usize,
}

/// Runs tracker -> supervisor -> saturation -> plant for the whole horizon.
///
/// The requested input is recorded unsaturated; the applied input is the
/// supervisor output saturated onto U (the physical actuator cannot exceed
/// it). Fails upfront if the start state is not inside
/// `{minB <= eps_lo}`.
pub fn run_scenario(
    pendulum: &Pendulum,
    bank: &MinQuadraticBarrier,
    scenario: &Scenario,
    mut supervisor: Supervisor,
    gains: TrackingGains,
) -> Result<ScenarioResult, SimError> {
    let (b0, _) = bank.min_eval(&scenario.initial_state);
    if b0 > supervisor.eps_lo() {
        return Err(SimError::StartOutsideSafeSet {
            barrier: b0,
            eps_lo: supervisor.eps_lo(),
        });
    }
    let h = scenario.step;
    let steps = (scenario.horizon / h).round() as usize;
    let mut trajectory = Trajectory::with_capacity(steps + 1);
    let mut violations = ViolationReport::default();
    let mut x = scenario.initial_state.clone();
    for k in 0..=steps {
        let t = k as f64 * h;
        let r = scenario.reference.value(t);
        let u_hat = tracking_control_pendulum(pendulum, &x, r, gains);
        let out = supervisor.step(bank, &x, &u_hat);
        let u_applied = saturate_input(pendulum.input_rows(), &out.input);
        violations.check(k, t, pendulum, &x, &u_applied, &u_hat);
        trajectory.push(
            t,
            x.clone(),
            u_hat,
            u_applied.clone(),
            out.barrier,
            out.mode,
        );
        if k < steps {
            x = integrate_step(pendulum, &x, &u_applied, h)?;
        }
    }
    let mode_switches = trajectory.mode_switches();
    Ok(ScenarioResult {
        trajectory,
        violations,
        mode_switches,
    })
}

/// All unordered coordinate-plane pairs of an `n`-dimensional state space.
pub fn plane_projections(n: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            out.push((i, j));
        }
    }
    out
}

/// Start states on the extreme-projected edge of the safe set.
///
/// For `count` uniformly spaced directions in the `(i, j)` plane (zeros in
/// the complementary coordinates), each ray from the origin is scanned for
/// the largest scale with `minB <= level` and the crossing is sharpened by
/// bisection.
pub fn edge_start_states(
    bank: &MinQuadraticBarrier,
    projection: (usize, usize),
    count: usize,
    level: f64,
) -> Vec<DVector<f64>> {
    let n = bank.state_dim();
    assert!(projection.0 < n && projection.1 < n && projection.0 != projection.1);
    // Everything at `level` lies within every ellipsoid's reach from the
    // origin; trace(Q) bounds the squared semi-axes.
    let reach = bank
        .pairs()
        .iter()
        .map(|p| p.x_e().norm() + ComplexField::sqrt(p.q().trace()))
        .fold(0.0f64, f64::max)
        * 1.05
        + 1e-6;
    const SCAN: usize = 4096;
    let mut out = Vec::with_capacity(count);
    for k in 0..count {
        let angle = core::f64::consts::TAU * (k as f64) / (count as f64);
        let mut dir = DVector::zeros(n);
        dir[projection.0] = ComplexField::cos(angle);
        dir[projection.1] = ComplexField::sin(angle);
        // Coarse scan from the outside in for the outermost admissible point.
        let mut inside = 0.0f64;
        let mut outside = reach;
        for s in (0..=SCAN).rev() {
            let scale = reach * (s as f64) / (SCAN as f64);
            if bank.min_eval(&(&dir * scale)).0 <= level {
                inside = scale;
                outside = reach * ((s + 1) as f64) / (SCAN as f64);
                break;
            }
        }
        for _ in 0..70 {
            let mid = 0.5 * (inside + outside);
            if bank.min_eval(&(&dir * mid)).0 <= level {
                inside = mid;
            } else {
                outside = mid;
            }
        }
        out.push(dir * inside);
    }
    out
}

/// Simulates the raw barrier feedback `u = combined k(x)` from `x0`.
///
/// No tracker and no supervisor: every step applies the active pair's
/// feedback unsaturated and the monitor records any excursion. The run stops
/// once the min-barrier value falls to `stop_level` (converged near a bank
/// equilibrium) or when the horizon ends.
pub fn run_edge_trajectory(
    plant: &dyn Plant,
    bank: &MinQuadraticBarrier,
    x0: DVector<f64>,
    horizon: f64,
    h: f64,
    stop_level: f64,
) -> Result<(Trajectory, ViolationReport), SimError> {
    if !(h > 0.0 && horizon >= h) {
        return Err(SimError::BadTiming);
    }
    let steps = (horizon / h).round() as usize;
    let mut trajectory = Trajectory::with_capacity(steps + 1);
    let mut violations = ViolationReport::default();
    let mut x = x0;
    for k in 0..=steps {
        let t = k as f64 * h;
        let (b, idx) = bank.min_eval(&x);
        let u = bank.pairs()[idx].control(&x);
        violations.check(k, t, plant, &x, &u, &u);
        trajectory.push(
            t,
            x.clone(),
            u.clone(),
            u.clone(),
            b,
            SupervisorMode::Safety { active: idx },
        );
        if b <= stop_level || k == steps {
            break;
        }
        x = integrate_step(plant, &x, &u, h)?;
    }
    Ok((trajectory, violations))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::barrier::QuadraticBarrierPair;
    use crate::plant::SpringMass;
    use alloc::vec;
    use nalgebra::DMatrix;

    #[test]
    fn equilibria_are_fixed_points_of_the_integrator() {
        let sm = SpringMass::default();
        let x = DVector::from_row_slice(&[0.3, 0.0, 0.3, 0.0]);
        let next = integrate_step(&sm, &x, &DVector::zeros(1), 1e-3).unwrap();
        assert_eq!(next, x);

        let p = Pendulum::default();
        let x = DVector::zeros(2);
        let next = integrate_step(&p, &x, &DVector::zeros(1), 1e-3).unwrap();
        assert_eq!(next, x);
    }

    #[test]
    fn gravity_cancelling_torque_freezes_the_pendulum() {
        let p = Pendulum::default();
        let x = DVector::from_row_slice(&[0.1, 0.0]);
        let tau = DVector::from_row_slice(&[-p.gravity_torque() * 0.1f64.sin()]);
        assert!(p.dynamics(&x, &tau).norm() <= 1e-15);
        let next = integrate_step(&p, &x, &tau, 1e-3).unwrap();
        assert!((next - &x).norm() <= 1e-15);
    }

    #[test]
    fn diverged_state_is_reported() {
        let p = Pendulum::default();
        let x = DVector::from_row_slice(&[2e6, 0.0]);
        assert_eq!(
            integrate_step(&p, &x, &DVector::zeros(1), 1e-3),
            Err(SimError::NonFinite)
        );
    }

    #[test]
    fn spring_mass_rest_state_is_exactly_constant() {
        let sm = SpringMass::default();
        let mut x = DVector::from_row_slice(&[0.3, 0.0, 0.3, 0.0]);
        for _ in 0..1000 {
            let next = integrate_step(&sm, &x, &DVector::zeros(1), 1e-3).unwrap();
            assert!((&next - &x).norm() <= 1e-12);
            x = next;
        }
    }

    #[test]
    fn tracker_compensates_gravity_at_zero_error() {
        let p = Pendulum::default();
        let r = 0.4;
        let x = DVector::from_row_slice(&[r, 0.0]);
        let tau = tracking_control_pendulum(&p, &x, r, TrackingGains::default());
        assert!((tau[0] + p.gravity_torque() * r.sin()).abs() < 1e-12);
    }

    #[test]
    fn tracker_damps_pure_velocity() {
        let p = Pendulum::default();
        let x = DVector::from_row_slice(&[0.0, 1.0]);
        let tau = tracking_control_pendulum(&p, &x, 0.0, TrackingGains::default());
        assert!((tau[0] + p.inertia() * 10.0).abs() < 1e-12);
    }

    #[test]
    fn tracker_step_demand_exceeds_limits() {
        // 0.5 rad step from rest asks for ~18.4 N m against a 10 N m limit,
        // which is why the runs need supervision.
        let p = Pendulum::default();
        let tau = tracking_control_pendulum(&p, &DVector::zeros(2), 0.5, TrackingGains::default());
        assert!((tau[0] - 18.392112500000003).abs() < 1e-12);
        assert!(tau[0] > p.torque_max);
    }

    #[test]
    fn reference_interpolates_and_holds_ends() {
        let r = ReferenceSignal::new(vec![(1.0, 0.0), (2.0, 1.0)]).unwrap();
        assert_eq!(r.value(0.0), 0.0);
        assert_eq!(r.value(1.5), 0.5);
        assert_eq!(r.value(5.0), 1.0);
        assert!(ReferenceSignal::new(vec![(1.0, 0.0), (1.0, 1.0)]).is_none());
        assert!(ReferenceSignal::new(vec![]).is_none());
    }

    fn unit_bank_2d() -> MinQuadraticBarrier {
        let pair = QuadraticBarrierPair::new(
            DVector::zeros(2),
            DVector::zeros(1),
            DMatrix::identity(2, 2),
            DMatrix::zeros(1, 2),
        )
        .unwrap();
        MinQuadraticBarrier::new(vec![pair]).unwrap()
    }

    #[test]
    fn scenario_rejects_start_outside_safe_set() {
        let p = Pendulum::default();
        let bank = unit_bank_2d();
        let scenario = Scenario::new(
            "test",
            ReferenceSignal::constant(0.0),
            DVector::from_row_slice(&[0.999, 0.0]),
            0.1,
            1e-3,
        )
        .unwrap();
        let sup = Supervisor::new(-1e-3, -2e-3).unwrap();
        assert!(matches!(
            run_scenario(&p, &bank, &scenario, sup, TrackingGains::default()),
            Err(SimError::StartOutsideSafeSet { .. })
        ));
    }

    #[test]
    fn quiescent_scenario_is_fully_transparent() {
        let p = Pendulum::default();
        let bank = unit_bank_2d();
        let scenario = Scenario::new(
            "rest",
            ReferenceSignal::constant(0.0),
            DVector::zeros(2),
            0.05,
            1e-3,
        )
        .unwrap();
        let sup = Supervisor::new(-1e-3, -2e-3).unwrap();
        let result = run_scenario(&p, &bank, &scenario, sup, TrackingGains::default()).unwrap();
        assert_eq!(result.mode_switches, 0);
        assert!(result.violations.is_clean());
        assert_eq!(result.trajectory.len(), 51);
        for (req, app) in result
            .trajectory
            .u_requested()
            .iter()
            .zip(result.trajectory.u_applied())
        {
            // Bit-for-bit transparency away from the boundary.
            assert_eq!(req, app);
        }
    }

    #[test]
    fn projections_enumerate_all_planes() {
        assert_eq!(plane_projections(2), vec![(0, 1)]);
        assert_eq!(plane_projections(4).len(), 6);
    }

    #[test]
    fn edge_states_sit_on_the_requested_level() {
        let bank = unit_bank_2d();
        let level = -2e-3;
        let starts = edge_start_states(&bank, (0, 1), 8, level);
        assert_eq!(starts.len(), 8);
        for x in &starts {
            let (b, _) = bank.min_eval(x);
            assert!(b <= level + 1e-12);
            assert!(b >= level - 1e-6, "b = {b}");
        }
    }

    #[test]
    fn edge_trajectory_stays_at_center_start() {
        let sm = SpringMass::default();
        let pair = QuadraticBarrierPair::new(
            DVector::from_row_slice(&[0.3, 0.0, 0.3, 0.0]),
            DVector::zeros(1),
            DMatrix::identity(4, 4) * 0.01,
            DMatrix::zeros(1, 4),
        )
        .unwrap();
        let bank = MinQuadraticBarrier::new(vec![pair]).unwrap();
        let x0 = DVector::from_row_slice(&[0.3, 0.0, 0.3, 0.0]);
        let (traj, report) =
            run_edge_trajectory(&sm, &bank, x0.clone(), 0.05, 1e-3, -0.995).unwrap();
        // B(x0) = -1 <= stop level: the run records the start and stops.
        assert_eq!(traj.len(), 1);
        assert_eq!(traj.states()[0], x0);
        assert!(report.is_clean());
    }
}
