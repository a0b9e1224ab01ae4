//! Thin bridge from affine matrix-inequality programs to the Clarabel
//! interior-point solver.
//!
//! A program collects scalar inequalities and blocks of the form
//! `M0 + sum_v x_v M_v >= 0` (positive semidefinite), plus a linear
//! objective. The problems built here are tiny (tens of variables, blocks up
//! to 8x8), so the constraint matrix is assembled densely and converted to
//! CSC in one pass.

use clarabel::algebra::CscMatrix;
use clarabel::solver::{
    DefaultSettingsBuilder, DefaultSolver, IPSolver, SolverStatus, SupportedConeT,
};
use nalgebra::DMatrix;
use thiserror::Error;

#[derive(Debug, Clone, Error)]
pub enum SdpError {
    #[error("problem is primal infeasible")]
    Infeasible,
    #[error("solver did not return a usable solution ({status})")]
    Failure { status: String },
    #[error("solver setup failed: {0}")]
    Setup(String),
}

/// Linear-objective conic program over PSD and nonnegative cones.
pub struct AffineSdp {
    n_vars: usize,
    /// Coefficients of the objective, to be minimized.
    objective: Vec<f64>,
    rows: Vec<Vec<f64>>,
    rhs: Vec<f64>,
    cones: Vec<SupportedConeT<f64>>,
}

impl AffineSdp {
    pub fn new(n_vars: usize) -> Self {
        Self {
            n_vars,
            objective: vec![0.0; n_vars],
            rows: Vec::new(),
            rhs: Vec::new(),
            cones: Vec::new(),
        }
    }

    /// Maximize `coeffs . x` (stored negated; the solver minimizes).
    pub fn maximize(&mut self, coeffs: &[f64]) {
        assert_eq!(coeffs.len(), self.n_vars);
        self.objective = coeffs.iter().map(|c| -c).collect();
    }

    /// Adds the scalar constraint `sum coeffs_v x_v <= rhs`.
    pub fn linear_le(&mut self, coeffs: &[(usize, f64)], rhs: f64) {
        let mut row = vec![0.0; self.n_vars];
        for &(v, c) in coeffs {
            row[v] += c;
        }
        self.rows.push(row);
        self.rhs.push(rhs);
        self.cones.push(SupportedConeT::NonnegativeConeT(1));
    }

    /// Adds the block constraint `constant + sum_v x_v term_v >= 0` (PSD).
    ///
    /// All matrices must be symmetric of the same dimension; entries are
    /// packed in scaled upper-triangular column-major order as the PSD
    /// triangle cone expects.
    pub fn psd_ge_zero(&mut self, constant: &DMatrix<f64>, terms: &[(usize, DMatrix<f64>)]) {
        let dim = constant.nrows();
        assert_eq!(constant.ncols(), dim);
        let tri = dim * (dim + 1) / 2;
        let mut rows = vec![vec![0.0; self.n_vars]; tri];
        let mut rhs = vec![0.0; tri];
        svec_scan(dim, |slot, r, c, scale| {
            rhs[slot] = scale * constant[(r, c)];
        });
        for (v, term) in terms {
            assert_eq!(term.nrows(), dim);
            assert_eq!(term.ncols(), dim);
            svec_scan(dim, |slot, r, c, scale| {
                // s = svec(M(x)) = svec(constant) - A x, so A gets -term.
                rows[slot][*v] += -scale * term[(r, c)];
            });
        }
        self.rows.extend(rows);
        self.rhs.extend(rhs);
        self.cones.push(SupportedConeT::PSDTriangleConeT(dim));
    }

    /// Solves the program; returns the primal solution.
    ///
    /// `AlmostSolved` outcomes are returned as solutions on purpose: every
    /// candidate is re-verified by eigenvalue checks downstream, so solver
    /// status codes are never the acceptance authority.
    pub fn solve(&self) -> Result<Vec<f64>, SdpError> {
        let a = dense_to_csc(&self.rows, self.n_vars);
        let p = CscMatrix::zeros((self.n_vars, self.n_vars));
        let settings = DefaultSettingsBuilder::default()
            .verbose(false)
            .build()
            .map_err(|e| SdpError::Setup(format!("{e:?}")))?;
        let mut solver =
            DefaultSolver::new(&p, &self.objective, &a, &self.rhs, &self.cones, settings)
                .map_err(|e| SdpError::Setup(format!("{e:?}")))?;
        solver.solve();
        match solver.solution.status {
            SolverStatus::Solved | SolverStatus::AlmostSolved => Ok(solver.solution.x.clone()),
            SolverStatus::PrimalInfeasible | SolverStatus::AlmostPrimalInfeasible => {
                Err(SdpError::Infeasible)
            }
            status => Err(SdpError::Failure {
                status: format!("{status:?}"),
            }),
        }
    }
}

/// Visits svec slots of a `dim x dim` symmetric matrix: upper triangle,
/// column-major, off-diagonal entries scaled by sqrt(2).
fn svec_scan(dim: usize, mut visit: impl FnMut(usize, usize, usize, f64)) {
    let sqrt2 = core::f64::consts::SQRT_2;
    let mut slot = 0;
    for c in 0..dim {
        for r in 0..=c {
            let scale = if r == c { 1.0 } else { sqrt2 };
            visit(slot, r, c, scale);
            slot += 1;
        }
    }
}

fn dense_to_csc(rows: &[Vec<f64>], n_cols: usize) -> CscMatrix<f64> {
    let n_rows = rows.len();
    let mut colptr = Vec::with_capacity(n_cols + 1);
    let mut rowval = Vec::new();
    let mut nzval = Vec::new();
    colptr.push(0);
    for c in 0..n_cols {
        for (r, row) in rows.iter().enumerate() {
            if row[c] != 0.0 {
                rowval.push(r);
                nzval.push(row[c]);
            }
        }
        colptr.push(rowval.len());
    }
    CscMatrix::new(n_rows, n_cols, colptr, rowval, nzval)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn maximizes_trace_under_diagonal_caps() {
        // Variables (q11, q21, q22): maximize q11 + q22 subject to
        // q11 <= 2, q22 <= 3, Q >= 1e-6 I. Optimum is diag(2, 3).
        let mut sdp = AffineSdp::new(3);
        sdp.maximize(&[1.0, 0.0, 1.0]);
        sdp.linear_le(&[(0, 1.0)], 2.0);
        sdp.linear_le(&[(2, 1.0)], 3.0);
        let eye = DMatrix::identity(2, 2);
        let e00 = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        let e10 = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let e11 = DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 0.0, 1.0]);
        sdp.psd_ge_zero(&(-1e-6 * &eye), &[(0, e00), (1, e10), (2, e11)]);
        let x = sdp.solve().unwrap();
        assert!((x[0] - 2.0).abs() < 1e-6, "x = {x:?}");
        assert!(x[1].abs() < 1e-5);
        assert!((x[2] - 3.0).abs() < 1e-6);
    }

    #[test]
    fn detects_infeasibility() {
        // q11 <= -1 conflicts with Q >= 0.
        let mut sdp = AffineSdp::new(1);
        sdp.maximize(&[1.0]);
        sdp.linear_le(&[(0, 1.0)], -1.0);
        let one = DMatrix::from_row_slice(1, 1, &[1.0]);
        sdp.psd_ge_zero(&DMatrix::zeros(1, 1), &[(0, one)]);
        assert!(matches!(sdp.solve(), Err(SdpError::Infeasible)));
    }

    #[test]
    fn off_diagonal_coupling_is_respected() {
        // maximize q21 subject to 0 <= Q <= I: with Q = [[a, b], [b, c]],
        // b^2 <= a c and b^2 <= (1-a)(1-c), so the optimum is b = 1/2 at
        // a = c = 1/2. A wrong svec scaling would shift this away from 1/2.
        let mut sdp = AffineSdp::new(3);
        sdp.maximize(&[0.0, 1.0, 0.0]);
        let e00 = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        let e10 = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let e11 = DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 0.0, 1.0]);
        let eye = DMatrix::identity(2, 2);
        sdp.psd_ge_zero(&eye, &[(0, -&e00), (1, -&e10), (2, -&e11)]);
        sdp.psd_ge_zero(&DMatrix::zeros(2, 2), &[(0, e00), (1, e10), (2, e11)]);
        let x = sdp.solve().unwrap();
        assert!((x[1] - 0.5).abs() < 1e-5, "x = {x:?}");
        assert!((x[0] - 0.5).abs() < 1e-5);
        assert!((x[2] - 0.5).abs() < 1e-5);
    }
}
