//! Quadratic barrier pairs and their pointwise-min combination.
//!
//! A pair holds the ellipsoid shape matrix `Q`, its cached inverse `P`, the
//! equilibrium `(x_e, u_e)` and the feedback gain `K`. The barrier is
//! `B(x) = (x - x_e)^T P (x - x_e) - 1`, so `B(x_e) = -1` and the unit level
//! set is the ellipsoid boundary. A bank combines pairs with a pointwise
//! minimum; its zero sublevel set is the union of the ellipsoids.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum BarrierError {
    #[error("matrix and vector dimensions are inconsistent")]
    DimensionMismatch,
    #[error("shape matrix is not symmetric positive definite")]
    NotPositiveDefinite,
    #[error("inverse residual {residual:.3e} exceeds 1e-8")]
    InverseInaccurate { residual: f64 },
    #[error("a barrier bank needs at least one pair")]
    Empty,
    #[error("pairs in a bank must share state and input dimensions")]
    MixedDimensions,
    #[error("projection coordinates are out of range or equal")]
    BadProjection,
}

/// One quadratic barrier/gain pair `(B, k)` centered at an equilibrium.
#[derive(Debug, Clone)]
pub struct QuadraticBarrierPair {
    x_e: DVector<f64>,
    u_e: DVector<f64>,
    q: DMatrix<f64>,
    p: DMatrix<f64>,
    k: DMatrix<f64>,
}

impl QuadraticBarrierPair {
    /// Builds a pair from the ellipsoid shape `Q` and gain `K`, caching
    /// `P = Q^{-1}` via a Cholesky factorization.
    pub fn new(
        x_e: DVector<f64>,
        u_e: DVector<f64>,
        q: DMatrix<f64>,
        k: DMatrix<f64>,
    ) -> Result<Self, BarrierError> {
        let n = x_e.len();
        let m = u_e.len();
        if q.nrows() != n || q.ncols() != n || k.nrows() != m || k.ncols() != n {
            return Err(BarrierError::DimensionMismatch);
        }
        if (&q - q.transpose()).norm() > 1e-10 * q.norm().max(1.0) {
            return Err(BarrierError::NotPositiveDefinite);
        }
        let chol = q
            .clone()
            .cholesky()
            .ok_or(BarrierError::NotPositiveDefinite)?;
        let mut p = chol.inverse();
        // Symmetrize to suppress factorization round-off.
        p = (&p + p.transpose()) * 0.5;
        let residual = (&p * &q - DMatrix::identity(n, n)).norm();
        if residual > 1e-8 {
            return Err(BarrierError::InverseInaccurate { residual });
        }
        if p.clone().cholesky().is_none() {
            return Err(BarrierError::NotPositiveDefinite);
        }
        Ok(Self { x_e, u_e, q, p, k })
    }

    pub fn x_e(&self) -> &DVector<f64> {
        &self.x_e
    }

    pub fn u_e(&self) -> &DVector<f64> {
        &self.u_e
    }

    pub fn q(&self) -> &DMatrix<f64> {
        &self.q
    }

    /// Cached inverse shape matrix `P = Q^{-1}`.
    pub fn p(&self) -> &DMatrix<f64> {
        &self.p
    }

    pub fn k(&self) -> &DMatrix<f64> {
        &self.k
    }

    pub fn state_dim(&self) -> usize {
        self.x_e.len()
    }

    pub fn input_dim(&self) -> usize {
        self.u_e.len()
    }

    /// Barrier value `(x - x_e)^T P (x - x_e) - 1`.
    ///
    /// Evaluated with an allocation-free double loop; this sits on the hot
    /// path of every supervisor step.
    pub fn barrier(&self, x: &DVector<f64>) -> f64 {
        let n = self.x_e.len();
        assert_eq!(x.len(), n, "state dimension mismatch");
        let mut acc = 0.0;
        for r in 0..n {
            let dr = x[r] - self.x_e[r];
            let mut inner = 0.0;
            for c in 0..n {
                inner += self.p[(r, c)] * (x[c] - self.x_e[c]);
            }
            acc += dr * inner;
        }
        acc - 1.0
    }

    /// Feedback `k(x) = u_e + K (x - x_e)`.
    pub fn control(&self, x: &DVector<f64>) -> DVector<f64> {
        assert_eq!(x.len(), self.x_e.len(), "state dimension mismatch");
        &self.u_e + &self.k * (x - &self.x_e)
    }

    /// Exact shadow of the ellipsoid `{B <= 0}` onto the `(c0, c1)` plane.
    ///
    /// Returns the 2x2 matrix `S` with the projected region
    /// `{z : (z - z_e)^T S (z - z_e) <= 1}`, obtained as the Schur
    /// complement of the complementary block of `P` (the true shadow, not a
    /// slice).
    pub fn shadow_2d(&self, c0: usize, c1: usize) -> Result<DMatrix<f64>, BarrierError> {
        let n = self.state_dim();
        if c0 >= n || c1 >= n || c0 == c1 {
            return Err(BarrierError::BadProjection);
        }
        let keep = [c0, c1];
        let rest: Vec<usize> = (0..n).filter(|i| !keep.contains(i)).collect();
        let pzz = DMatrix::from_fn(2, 2, |r, c| self.p[(keep[r], keep[c])]);
        if rest.is_empty() {
            return Ok(pzz);
        }
        let pzw = DMatrix::from_fn(2, rest.len(), |r, c| self.p[(keep[r], rest[c])]);
        let pww = DMatrix::from_fn(rest.len(), rest.len(), |r, c| self.p[(rest[r], rest[c])]);
        let chol = pww.cholesky().ok_or(BarrierError::NotPositiveDefinite)?;
        let s = &pzz - &pzw * chol.solve(&pzw.transpose());
        Ok((&s + s.transpose()) * 0.5)
    }
}

/// Ordered bank of barrier pairs combined by pointwise minimum.
#[derive(Debug, Clone)]
pub struct MinQuadraticBarrier {
    pairs: Vec<QuadraticBarrierPair>,
}

impl MinQuadraticBarrier {
    pub fn new(pairs: Vec<QuadraticBarrierPair>) -> Result<Self, BarrierError> {
        let first = pairs.first().ok_or(BarrierError::Empty)?;
        let (n, m) = (first.state_dim(), first.input_dim());
        if pairs
            .iter()
            .any(|p| p.state_dim() != n || p.input_dim() != m)
        {
            return Err(BarrierError::MixedDimensions);
        }
        Ok(Self { pairs })
    }

    pub fn pairs(&self) -> &[QuadraticBarrierPair] {
        &self.pairs
    }

    /// Number of pairs; at least one by construction.
    #[allow(clippy::len_without_is_empty)]
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn state_dim(&self) -> usize {
        self.pairs[0].state_dim()
    }

    pub fn input_dim(&self) -> usize {
        self.pairs[0].input_dim()
    }

    /// Minimum barrier value and the lowest index attaining it.
    ///
    /// Ties break to the lowest index; the selected control is equally valid
    /// for every minimizer, so the choice does not affect safety.
    pub fn min_eval(&self, x: &DVector<f64>) -> (f64, usize) {
        let mut best = f64::INFINITY;
        let mut index = 0;
        for (i, pair) in self.pairs.iter().enumerate() {
            let value = pair.barrier(x);
            if value < best {
                best = value;
                index = i;
            }
        }
        (best, index)
    }

    /// Feedback of the pair selected by [`Self::min_eval`], with its index.
    pub fn combined_control(&self, x: &DVector<f64>) -> (DVector<f64>, usize) {
        let (_, index) = self.min_eval(x);
        (self.pairs[index].control(x), index)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    fn unit_pair(center: &[f64], input: &[f64]) -> QuadraticBarrierPair {
        let n = center.len();
        let m = input.len();
        QuadraticBarrierPair::new(
            DVector::from_row_slice(center),
            DVector::from_row_slice(input),
            DMatrix::identity(n, n),
            DMatrix::zeros(m, n),
        )
        .unwrap()
    }

    #[test]
    fn barrier_is_minus_one_at_center() {
        let pair = unit_pair(&[0.3, -0.2], &[1.0]);
        assert_eq!(pair.barrier(pair.x_e()), -1.0);
    }

    #[test]
    fn barrier_is_zero_on_unit_sphere() {
        let pair = unit_pair(&[0.0, 0.0], &[0.0]);
        let x = DVector::from_row_slice(&[0.6, 0.8]);
        assert!(pair.barrier(&x).abs() < 1e-15);
    }

    #[test]
    fn control_returns_center_input_at_center_and_for_zero_gain() {
        let pair = unit_pair(&[0.1, 0.2], &[3.0]);
        assert_eq!(pair.control(pair.x_e())[0], 3.0);
        let x = DVector::from_row_slice(&[-0.4, 0.9]);
        assert_eq!(pair.control(&x)[0], 3.0);
    }

    #[test]
    fn inverse_is_cached_and_consistent() {
        let q = DMatrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 1.0]);
        let pair = QuadraticBarrierPair::new(
            DVector::zeros(2),
            DVector::zeros(1),
            q.clone(),
            DMatrix::zeros(1, 2),
        )
        .unwrap();
        assert!((pair.p() * q - DMatrix::identity(2, 2)).norm() <= 1e-8);
    }

    #[test]
    fn indefinite_shape_is_rejected() {
        let q = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        let err = QuadraticBarrierPair::new(
            DVector::zeros(2),
            DVector::zeros(1),
            q,
            DMatrix::zeros(1, 2),
        )
        .unwrap_err();
        assert_eq!(err, BarrierError::NotPositiveDefinite);
    }

    #[test]
    fn min_eval_singleton_returns_pair_value() {
        let bank = MinQuadraticBarrier::new(vec![unit_pair(&[0.0], &[0.0])]).unwrap();
        let x = DVector::from_row_slice(&[0.5]);
        assert_eq!(bank.min_eval(&x), (-0.75, 0));
    }

    #[test]
    fn min_eval_picks_smaller_value() {
        // B1(x) = -0.2, B2(x) = -0.5 at x = 0.
        let bank = MinQuadraticBarrier::new(vec![
            unit_pair(&[0.8f64.sqrt()], &[0.0]),
            unit_pair(&[0.5f64.sqrt()], &[0.0]),
        ])
        .unwrap();
        let (v, i) = bank.min_eval(&DVector::zeros(1));
        assert!((v + 0.5).abs() < 1e-15);
        assert_eq!(i, 1);
    }

    #[test]
    fn min_eval_breaks_ties_to_lowest_index() {
        let bank = MinQuadraticBarrier::new(vec![
            unit_pair(&[0.5], &[10.0]),
            unit_pair(&[-0.5], &[20.0]),
        ])
        .unwrap();
        let (v, i) = bank.min_eval(&DVector::zeros(1));
        assert_eq!(v, -0.75);
        assert_eq!(i, 0);
        let (u, idx) = bank.combined_control(&DVector::zeros(1));
        assert_eq!(idx, 0);
        assert_eq!(u[0], 10.0);
    }

    #[test]
    fn combined_control_returns_center_input_at_owning_center() {
        let bank = MinQuadraticBarrier::new(vec![
            unit_pair(&[0.0, 0.0], &[1.0]),
            unit_pair(&[5.0, 0.0], &[2.0]),
        ])
        .unwrap();
        let (u, idx) = bank.combined_control(&DVector::from_row_slice(&[5.0, 0.0]));
        assert_eq!(idx, 1);
        assert_eq!(u[0], 2.0);
    }

    #[test]
    fn empty_bank_is_rejected() {
        assert_eq!(
            MinQuadraticBarrier::new(vec![]).unwrap_err(),
            BarrierError::Empty
        );
    }

    #[test]
    fn shadow_of_2d_pair_is_p_itself() {
        let q = DMatrix::from_row_slice(2, 2, &[0.5, 0.1, 0.1, 2.0]);
        let pair = QuadraticBarrierPair::new(
            DVector::zeros(2),
            DVector::zeros(1),
            q,
            DMatrix::zeros(1, 2),
        )
        .unwrap();
        let s = pair.shadow_2d(0, 1).unwrap();
        assert!((s - pair.p()).norm() < 1e-14);
    }

    #[test]
    fn shadow_contains_projected_boundary_points() {
        // Shadow of a 4-D ellipsoid: any point of the full ellipsoid must
        // project inside the 2-D shadow (value <= 1).
        let q = DMatrix::from_row_slice(
            4,
            4,
            &[
                1.0, 0.2, 0.1, 0.0, //
                0.2, 0.8, 0.0, 0.1, //
                0.1, 0.0, 1.2, 0.3, //
                0.0, 0.1, 0.3, 0.6,
            ],
        );
        let pair = QuadraticBarrierPair::new(
            DVector::zeros(4),
            DVector::zeros(1),
            q.clone(),
            DMatrix::zeros(1, 4),
        )
        .unwrap();
        let s = pair.shadow_2d(0, 2).unwrap();
        let chol = q.cholesky().unwrap();
        let l = chol.l();
        for k in 0..200 {
            let angle = core::f64::consts::TAU * (k as f64) / 200.0;
            let mut dir = DVector::zeros(4);
            dir[0] = angle.cos();
            dir[1] = (3.0 * angle).sin() * 0.5;
            dir[2] = angle.sin();
            dir[3] = (2.0 * angle).cos() * 0.5;
            dir /= dir.norm();
            let x = &l * dir; // on the ellipsoid boundary
            let z = DVector::from_row_slice(&[x[0], x[2]]);
            let val = (z.transpose() * &s * &z)[(0, 0)];
            assert!(val <= 1.0 + 1e-12, "val = {val}");
        }
    }

    proptest! {
        // Min of finitely many continuous quadratics is Lipschitz on a
        // bounded set: |minB(x) - minB(y)| is bounded via the worst pair.
        #[test]
        fn min_barrier_is_continuous(
            x0 in -2.0f64..2.0, x1 in -2.0f64..2.0,
            dx0 in -1e-3f64..1e-3, dx1 in -1e-3f64..1e-3,
        ) {
            let bank = MinQuadraticBarrier::new(vec![
                unit_pair(&[0.5, 0.0], &[0.0]),
                unit_pair(&[-0.5, 0.2], &[0.0]),
            ]).unwrap();
            let x = DVector::from_row_slice(&[x0, x1]);
            let y = DVector::from_row_slice(&[x0 + dx0, x1 + dx1]);
            // Lipschitz bound max_n ||P_n|| (||x-c|| + ||y-c||) <= 2*(r+3).
            let step = (&y - &x).norm();
            let bound = 2.0 * (x.norm().max(y.norm()) + 3.0) * step;
            let diff = (bank.min_eval(&x).0 - bank.min_eval(&y).0).abs();
            prop_assert!(diff <= bound + 1e-12);
        }
    }
}
