//! Polytopic linear differential inclusions around equilibria.
//!
//! An LDI model replaces the nonlinear plant with the convex hull of a few
//! linear vertex models, valid inside a box around the equilibrium. The
//! synthesizer treats the vertex models as the ground truth, so the model
//! must over-approximate the true vector field everywhere in its validity
//! box — for the pendulum this is arranged by bracketing the sine
//! linearization error with a brute-force bound.

use alloc::vec::Vec;

use nalgebra::{ComplexField, DMatrix, DVector};
use thiserror::Error;

use crate::plant::{BoxRow, Pendulum};

/// Validity half-widths at or below this are rejected as degenerate slivers.
pub const ALPHA_MIN: f64 = 1e-3;

/// Default grid density for the brute-force linearization-error search.
pub const ZETA_GRID_POINTS: usize = 10_001;

/// Absolute inflation applied to the brute-force error bound, comfortably
/// above the grid resolution error yet negligible next to the LMI data.
pub const ZETA_MARGIN: f64 = 1e-6;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum LdiError {
    /// No input drives the dynamics residual below tolerance at this state.
    #[error("state is not an equilibrium (best residual {residual:.3e})")]
    NoEquilibrium { residual: f64 },
    /// The validity box has collapsed (width below `ALPHA_MIN`).
    #[error("validity region width {width:.3e} is not positive enough")]
    InvalidRegion { width: f64 },
    /// Holding the equilibrium already exhausts the input budget.
    #[error("equilibrium needs input magnitude {required:.4} but the limit is {limit:.4}")]
    InfeasibleEquilibrium { required: f64, limit: f64 },
    /// Vertex matrices or constraint rows have inconsistent shapes.
    #[error("inconsistent matrix or constraint dimensions")]
    DimensionMismatch,
    /// The validity box is not provably inside the global constraint row.
    #[error("validity box exceeds global constraint row {row}")]
    NotContained { row: usize },
}

/// Polytopic LDI: vertex models plus the box on which they are trusted.
///
/// The model asserts `xdot ∈ Co{ A_l (x - x_e) + B_l (u - u_e) }` for all
/// `x` with `|a_i^T (x - x_e)| <= alpha_i` and `u` with
/// `|b_i^T (u - u_e)| <= beta_i`.
#[derive(Debug, Clone)]
pub struct PolytopicLdi {
    vertex_a: Vec<DMatrix<f64>>,
    vertex_b: Vec<DMatrix<f64>>,
    x_e: DVector<f64>,
    u_e: DVector<f64>,
    state_rows: Vec<BoxRow>,
    input_rows: Vec<BoxRow>,
}

impl PolytopicLdi {
    /// Validates shapes, positivity of the box widths, and containment of
    /// the validity box in the plant's global constraint sets.
    ///
    /// Containment is checked row-wise: every global row must have a
    /// matching local row (same normal) whose width plus the center offset
    /// stays within the global bound.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        vertex_a: Vec<DMatrix<f64>>,
        vertex_b: Vec<DMatrix<f64>>,
        x_e: DVector<f64>,
        u_e: DVector<f64>,
        state_rows: Vec<BoxRow>,
        input_rows: Vec<BoxRow>,
        global_state_rows: &[BoxRow],
        global_input_rows: &[BoxRow],
    ) -> Result<Self, LdiError> {
        let n = x_e.len();
        let m = u_e.len();
        if vertex_a.is_empty() || vertex_a.len() != vertex_b.len() {
            return Err(LdiError::DimensionMismatch);
        }
        for (a, b) in vertex_a.iter().zip(&vertex_b) {
            if a.nrows() != n || a.ncols() != n || b.nrows() != n || b.ncols() != m {
                return Err(LdiError::DimensionMismatch);
            }
        }
        for row in state_rows.iter() {
            if row.normal.len() != n {
                return Err(LdiError::DimensionMismatch);
            }
            if row.bound <= 0.0 {
                return Err(LdiError::InvalidRegion { width: row.bound });
            }
        }
        for row in input_rows.iter() {
            if row.normal.len() != m {
                return Err(LdiError::DimensionMismatch);
            }
            if row.bound <= 0.0 {
                return Err(LdiError::InvalidRegion { width: row.bound });
            }
        }
        check_containment(&state_rows, global_state_rows, &x_e)?;
        check_containment(&input_rows, global_input_rows, &u_e)?;
        Ok(Self {
            vertex_a,
            vertex_b,
            x_e,
            u_e,
            state_rows,
            input_rows,
        })
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_a.len()
    }

    pub fn vertex_a(&self) -> &[DMatrix<f64>] {
        &self.vertex_a
    }

    pub fn vertex_b(&self) -> &[DMatrix<f64>] {
        &self.vertex_b
    }

    pub fn x_e(&self) -> &DVector<f64> {
        &self.x_e
    }

    pub fn u_e(&self) -> &DVector<f64> {
        &self.u_e
    }

    pub fn state_rows(&self) -> &[BoxRow] {
        &self.state_rows
    }

    pub fn input_rows(&self) -> &[BoxRow] {
        &self.input_rows
    }

    pub fn state_dim(&self) -> usize {
        self.x_e.len()
    }

    pub fn input_dim(&self) -> usize {
        self.u_e.len()
    }
}

/// Every global row needs a local row with the same normal whose shifted
/// width fits inside the global bound.
fn check_containment(
    local: &[BoxRow],
    global: &[BoxRow],
    center: &DVector<f64>,
) -> Result<(), LdiError> {
    const TOL: f64 = 1e-12;
    for (j, grow) in global.iter().enumerate() {
        let mut covered = false;
        for lrow in local {
            if (&lrow.normal - &grow.normal).norm() <= TOL {
                let offset = grow.normal.dot(center).abs();
                if lrow.bound + offset <= grow.bound + TOL {
                    covered = true;
                }
                break;
            }
        }
        if !covered {
            return Err(LdiError::NotContained { row: j });
        }
    }
    Ok(())
}

/// Brute-force bound on the pendulum's sine-linearization error.
///
/// `zeta(theta) = (g/l) [ (sin theta - sin theta_e)/(theta - theta_e)
/// - cos theta_e ]`, with the removable singularity at `theta = theta_e`
/// evaluated as zero. Returns `max |zeta|` over a uniform grid on
/// `[theta_e - alpha, theta_e + alpha]`, inflated by [`ZETA_MARGIN`] so the
/// two-sided bracket `+-zeta_bound` covers the grid resolution error.
pub fn zeta_bound(
    pendulum: &Pendulum,
    theta_e: f64,
    alpha: f64,
    grid_points: usize,
) -> Result<f64, LdiError> {
    if alpha <= 0.0 {
        return Err(LdiError::InvalidRegion { width: alpha });
    }
    assert!(grid_points >= 2, "grid needs at least two points");
    let scale = pendulum.gravity / pendulum.length;
    let sin_e = ComplexField::sin(theta_e);
    let cos_e = ComplexField::cos(theta_e);
    let lo = theta_e - alpha;
    let span = 2.0 * alpha;
    let mut worst = 0.0f64;
    for i in 0..grid_points {
        let theta = lo + span * (i as f64) / ((grid_points - 1) as f64);
        let dt = theta - theta_e;
        let mag = if ComplexField::abs(dt) < 1e-6 {
            // The chord slope cancels catastrophically this close to the
            // center; substitute the analytic Taylor bound
            // |zeta| <= (g/l) |dt|/2 (1 + |dt|), which covers the removable
            // singularity (zero at dt = 0).
            scale * 0.5 * ComplexField::abs(dt) * (1.0 + ComplexField::abs(dt))
        } else {
            ComplexField::abs(scale * ((ComplexField::sin(theta) - sin_e) / dt - cos_e))
        };
        if mag > worst {
            worst = mag;
        }
    }
    Ok(worst + ZETA_MARGIN)
}
