//! Example plants and their constraint sets.
//!
//! Both plants are input-affine, `xdot = f(x) + g(x) u`, with symmetric box
//! constraints `|a_i^T x| <= c_i` on the state and `|b_i^T u| <= d_i` on the
//! input. Equilibrium inputs are closed form per plant; a new plant supplies
//! its own equilibrium map and linearization through the [`Plant`] trait.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{ComplexField, DMatrix, DVector};

use crate::ldi::{LdiError, PolytopicLdi, ALPHA_MIN, ZETA_GRID_POINTS};

/// One symmetric constraint row `|normal . v| <= bound`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxRow {
    pub normal: DVector<f64>,
    pub bound: f64,
}

impl BoxRow {
    pub fn new(normal: DVector<f64>, bound: f64) -> Self {
        Self { normal, bound }
    }

    /// Row aligned with coordinate `index` of a `dim`-dimensional vector.
    pub fn axis(dim: usize, index: usize, bound: f64) -> Self {
        let mut normal = DVector::zeros(dim);
        normal[index] = 1.0;
        Self { normal, bound }
    }

    /// Signed slack `bound - |normal . v|`; negative means violated.
    pub fn slack(&self, v: &DVector<f64>) -> f64 {
        self.bound - self.normal.dot(v).abs()
    }
}

/// Continuous-time input-affine plant with box constraints.
pub trait Plant {
    fn name(&self) -> &'static str;
    fn state_dim(&self) -> usize;
    fn input_dim(&self) -> usize;
    /// Coordinate names, used for CSV headers and projections.
    fn state_names(&self) -> &'static [&'static str];
    /// Right-hand side `f(x) + g(x) u`.
    fn dynamics(&self, x: &DVector<f64>, u: &DVector<f64>) -> DVector<f64>;
    /// Rows of the global state constraint set X.
    fn state_rows(&self) -> &[BoxRow];
    /// Rows of the global input constraint set U.
    fn input_rows(&self) -> &[BoxRow];
    /// Residual norm below which a point counts as an equilibrium.
    fn equilibrium_tolerance(&self) -> f64 {
        1e-10
    }

    /// Closed-form input solving `f(x_e) + g(x_e) u_e = 0`.
    ///
    /// Membership of `u_e` in U is *not* checked here; input feasibility is
    /// the synthesizer's concern.
    fn equilibrium_input(&self, x_e: &DVector<f64>) -> Result<DVector<f64>, LdiError>;

    /// Conservative polytopic LDI model valid in a box around `x_e`.
    fn linearize(&self, x_e: &DVector<f64>) -> Result<PolytopicLdi, LdiError>;
}

/// Saturate an input onto the box described by `rows` (radial scaling).
pub fn saturate_input(rows: &[BoxRow], u: &DVector<f64>) -> DVector<f64> {
    let mut scale = 1.0f64;
    for row in rows {
        let mag = row.normal.dot(u).abs();
        if mag > row.bound * scale {
            scale = mag / row.bound;
        }
    }
    if scale > 1.0 {
        u / scale
    } else {
        u.clone()
    }
}

// ---------------------------------------------------------------------------
// Inverted pendulum
// ---------------------------------------------------------------------------

/// Torque-driven inverted pendulum, `m l^2 thetaddot = tau + m g l sin(theta)`.
///
/// State `(theta, theta_dot)`, input `tau`. The position limit `theta_max`
/// doubles as the "point of no return": with the default parameters
/// `m g l sin(theta_max)` is within 0.3% of the torque limit, so gravity
/// overwhelms the actuator just past the position bound.
#[derive(Debug, Clone)]
pub struct Pendulum {
    pub mass: f64,
    pub length: f64,
    pub gravity: f64,
    pub theta_max: f64,
    pub omega_max: f64,
    pub torque_max: f64,
    state_rows: Vec<BoxRow>,
    input_rows: Vec<BoxRow>,
}

impl Pendulum {
    pub fn new(
        mass: f64,
        length: f64,
        gravity: f64,
        theta_max: f64,
        omega_max: f64,
        torque_max: f64,
    ) -> Self {
        let state_rows = vec![BoxRow::axis(2, 0, theta_max), BoxRow::axis(2, 1, omega_max)];
        let input_rows = vec![BoxRow::axis(1, 0, torque_max)];
        Self {
            mass,
            length,
            gravity,
            theta_max,
            omega_max,
            torque_max,
            state_rows,
            input_rows,
        }
    }

    /// Gravity torque scale `m g l`.
    pub fn gravity_torque(&self) -> f64 {
        self.mass * self.gravity * self.length
    }

    /// Rotational inertia `m l^2`.
    pub fn inertia(&self) -> f64 {
        self.mass * self.length * self.length
    }

    /// Equilibrium torque holding the pendulum at `theta_e`.
    pub fn equilibrium_torque(&self, theta_e: f64) -> f64 {
        -self.gravity_torque() * ComplexField::sin(theta_e)
    }

    /// Two-vertex LDI around the upright-family equilibrium at `theta_e`.
    ///
    /// Validity half-width is `min(0.25, theta_max - |theta_e|)`; the
    /// uncertain `(1,0)` entry brackets the sine-linearization error by
    /// `+-zeta_bound`.
    pub fn linearize_at(&self, theta_e: f64) -> Result<PolytopicLdi, LdiError> {
        let alpha = (self.theta_max - ComplexField::abs(theta_e)).min(VALIDITY_HALF_WIDTH);
        if alpha <= ALPHA_MIN {
            return Err(LdiError::InvalidRegion { width: alpha });
        }
        let tau_e = self.equilibrium_torque(theta_e);
        let beta = self.torque_max - ComplexField::abs(tau_e);
        if beta <= 0.0 {
            return Err(LdiError::InfeasibleEquilibrium {
                required: ComplexField::abs(tau_e),
                limit: self.torque_max,
            });
        }
        let zeta = crate::ldi::zeta_bound(self, theta_e, alpha, ZETA_GRID_POINTS)?;
        let k0 = self.gravity / self.length * ComplexField::cos(theta_e);
        let vertex_a: Vec<DMatrix<f64>> = [k0 + zeta, k0 - zeta]
            .iter()
            .map(|&k| DMatrix::from_row_slice(2, 2, &[0.0, 1.0, k, 0.0]))
            .collect();
        let b = DMatrix::from_row_slice(2, 1, &[0.0, 1.0 / self.inertia()]);
        let vertex_b = vec![b.clone(), b];
        let x_e = DVector::from_row_slice(&[theta_e, 0.0]);
        let u_e = DVector::from_row_slice(&[tau_e]);
        let state_rows = vec![
            BoxRow::axis(2, 0, alpha),
            BoxRow::axis(2, 1, self.omega_max),
        ];
        let input_rows = vec![BoxRow::axis(1, 0, beta)];
        PolytopicLdi::new(
            vertex_a,
            vertex_b,
            x_e,
            u_e,
            state_rows,
            input_rows,
            &self.state_rows,
            &self.input_rows,
        )
    }
}

/// Half-width cap on the pendulum linearization validity region.
pub const VALIDITY_HALF_WIDTH: f64 = 0.25;

impl Default for Pendulum {
    fn default() -> Self {
        Self::new(1.0, 1.213, 9.8, 1.0, 1.0, 10.0)
    }
}

impl Plant for Pendulum {
    fn name(&self) -> &'static str {
        "pendulum"
    }

    fn state_dim(&self) -> usize {
        2
    }

    fn input_dim(&self) -> usize {
        1
    }

    fn state_names(&self) -> &'static [&'static str] {
        &["theta", "theta_dot"]
    }

    fn dynamics(&self, x: &DVector<f64>, u: &DVector<f64>) -> DVector<f64> {
        DVector::from_row_slice(&[
            x[1],
            self.gravity / self.length * ComplexField::sin(x[0]) + u[0] / self.inertia(),
        ])
    }

    fn state_rows(&self) -> &[BoxRow] {
        &self.state_rows
    }

    fn input_rows(&self) -> &[BoxRow] {
        &self.input_rows
    }

    fn equilibrium_input(&self, x_e: &DVector<f64>) -> Result<DVector<f64>, LdiError> {
        assert_eq!(x_e.len(), 2, "pendulum state is 2-dimensional");
        let u_e = DVector::from_row_slice(&[self.equilibrium_torque(x_e[0])]);
        let residual = self.dynamics(x_e, &u_e).norm();
        if residual > self.equilibrium_tolerance() {
            return Err(LdiError::NoEquilibrium { residual });
        }
        Ok(u_e)
    }

    fn linearize(&self, x_e: &DVector<f64>) -> Result<PolytopicLdi, LdiError> {
        // Rejects states off the equilibrium manifold (theta_dot != 0).
        self.equilibrium_input(x_e)?;
        self.linearize_at(x_e[0])
    }
}

// ---------------------------------------------------------------------------
// Double spring-mass (series elastic actuator)
// ---------------------------------------------------------------------------

/// Two unit masses coupled by a spring, force input on the first mass.
///
/// State `(y1, y1_dot, y2, y2_dot)`, input `u`:
/// `m1 y1ddot = k (y2 - y1) + u`, `m2 y2ddot = k (y1 - y2)`.
/// Constraints bound both positions, both velocities, the spring deflection
/// `|y1 - y2|`, and the input. The dynamics are linear, so the LDI model is
/// exact (a single vertex).
#[derive(Debug, Clone)]
pub struct SpringMass {
    pub m1: f64,
    pub m2: f64,
    pub stiffness: f64,
    pub pos_max: f64,
    pub vel_max: f64,
    pub deflection_max: f64,
    pub effort_max: f64,
    state_rows: Vec<BoxRow>,
    input_rows: Vec<BoxRow>,
}

impl SpringMass {
    pub fn new(
        m1: f64,
        m2: f64,
        stiffness: f64,
        pos_max: f64,
        vel_max: f64,
        deflection_max: f64,
        effort_max: f64,
    ) -> Self {
        let deflection = DVector::from_row_slice(&[1.0, 0.0, -1.0, 0.0]);
        let state_rows = vec![
            BoxRow::axis(4, 0, pos_max),
            BoxRow::axis(4, 1, vel_max),
            BoxRow::axis(4, 2, pos_max),
            BoxRow::axis(4, 3, vel_max),
            BoxRow::new(deflection, deflection_max),
        ];
        let input_rows = vec![BoxRow::axis(1, 0, effort_max)];
        Self {
            m1,
            m2,
            stiffness,
            pos_max,
            vel_max,
            deflection_max,
            effort_max,
            state_rows,
            input_rows,
        }
    }

    /// System matrix of the (exactly linear) dynamics.
    pub fn a_matrix(&self) -> DMatrix<f64> {
        let k = self.stiffness;
        DMatrix::from_row_slice(
            4,
            4,
            &[
                0.0,
                1.0,
                0.0,
                0.0,
                -k / self.m1,
                0.0,
                k / self.m1,
                0.0,
                0.0,
                0.0,
                0.0,
                1.0,
                k / self.m2,
                0.0,
                -k / self.m2,
                0.0,
            ],
        )
    }

    /// Input matrix of the dynamics.
    pub fn b_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(4, 1, &[0.0, 1.0 / self.m1, 0.0, 0.0])
    }

    /// Exact single-vertex LDI centered at `(y_e, 0, y_e, 0)`.
    ///
    /// Every global box row is re-centered at the equilibrium with width
    /// shrunk by the center's offset along that row, so the validity box is
    /// contained in X by construction.
    pub fn linearize_at(&self, y_e: f64) -> Result<PolytopicLdi, LdiError> {
        let x_e = DVector::from_row_slice(&[y_e, 0.0, y_e, 0.0]);
        let u_e = DVector::zeros(1);
        let mut state_rows = Vec::with_capacity(self.state_rows.len());
        for row in &self.state_rows {
            let width = row.bound - row.normal.dot(&x_e).abs();
            if width <= ALPHA_MIN {
                return Err(LdiError::InvalidRegion { width });
            }
            state_rows.push(BoxRow::new(row.normal.clone(), width));
        }
        let mut input_rows = Vec::with_capacity(self.input_rows.len());
        for row in &self.input_rows {
            let width = row.bound - row.normal.dot(&u_e).abs();
            if width <= 0.0 {
                return Err(LdiError::InfeasibleEquilibrium {
                    required: row.normal.dot(&u_e).abs(),
                    limit: row.bound,
                });
            }
            input_rows.push(BoxRow::new(row.normal.clone(), width));
        }
        PolytopicLdi::new(
            vec![self.a_matrix()],
            vec![self.b_matrix()],
            x_e,
            u_e,
            state_rows,
            input_rows,
            &self.state_rows,
            &self.input_rows,
        )
    }
}

impl Default for SpringMass {
    fn default() -> Self {
        Self::new(1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 10.0)
    }
}

impl Plant for SpringMass {
    fn name(&self) -> &'static str {
        "spring-mass"
    }

    fn state_dim(&self) -> usize {
        4
    }

    fn input_dim(&self) -> usize {
        1
    }

    fn state_names(&self) -> &'static [&'static str] {
        &["y1", "y1_dot", "y2", "y2_dot"]
    }

    fn dynamics(&self, x: &DVector<f64>, u: &DVector<f64>) -> DVector<f64> {
        let k = self.stiffness;
        DVector::from_row_slice(&[
            x[1],
            (k * (x[2] - x[0]) + u[0]) / self.m1,
            x[3],
            k * (x[0] - x[2]) / self.m2,
        ])
    }

    fn state_rows(&self) -> &[BoxRow] {
        &self.state_rows
    }

    fn input_rows(&self) -> &[BoxRow] {
        &self.input_rows
    }

    fn equilibrium_input(&self, x_e: &DVector<f64>) -> Result<DVector<f64>, LdiError> {
        assert_eq!(x_e.len(), 4, "spring-mass state is 4-dimensional");
        // Force balance on the first mass; the residual check rejects states
        // that are not genuine equilibria (nonzero velocity or deflection).
        let u_e = DVector::from_row_slice(&[self.stiffness * (x_e[0] - x_e[2])]);
        let residual = self.dynamics(x_e, &u_e).norm();
        if residual > self.equilibrium_tolerance() {
            return Err(LdiError::NoEquilibrium { residual });
        }
        Ok(u_e)
    }

    fn linearize(&self, x_e: &DVector<f64>) -> Result<PolytopicLdi, LdiError> {
        self.equilibrium_input(x_e)?;
        self.linearize_at(x_e[0])
    }
}
