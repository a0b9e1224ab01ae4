//! Per-equilibrium determinant-maximization LMI synthesis.
//!
//! For one LDI model the subproblem finds `Q = Q^T > 0` and `Y` such that,
//! with `K = Y Q^{-1}` and `B(x) = (x - x_e)^T Q^{-1} (x - x_e) - 1`:
//!
//! * `Q >= eps I`,
//! * `a_i^T Q a_i <= alpha_i^2` for every state row (the ellipsoid stays in
//!   the validity box),
//! * `[[Q, Y^T b_i], [b_i^T Y, beta_i^2]] >= 0` for every input row (the
//!   feedback respects the input budget on the ellipsoid),
//! * `A_l Q + Q A_l^T + B_l Y + Y^T B_l^T + eps I + lambda Q <= 0` for every
//!   vertex (exponential decrease at rate `lambda` under every admissible
//!   model),
//!
//! while maximizing `log det Q` (ellipsoid volume). The concave objective is
//! handled by sequential linearization: each outer iteration maximizes
//! `trace(W Q)` with `W` refit to the previous iterate's inverse, keeping
//! the best verified iterate and stopping as soon as the volume gain drops
//! below tolerance or reverses. Every candidate is re-checked by direct
//! eigenvalue computation before acceptance; solver status codes are never
//! trusted.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use minquad_core::barrier::{MinQuadraticBarrier, QuadraticBarrierPair};
use minquad_core::ldi::PolytopicLdi;
use minquad_core::plant::Plant;

use crate::sdp::{AffineSdp, SdpError};

/// Extra slack imposed while solving (not while verifying), so interior
/// point termination error cannot push posterior margins negative.
const SOLVE_TIGHTEN: f64 = 1e-7;

/// Tolerances and loop limits of the synthesis subproblem.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
#[serde(default)]
pub struct SynthesisConfig {
    /// Numerical floor `eps` on `Q` and the decrease inequality.
    pub epsilon: f64,
    /// Minimum exponential decay rate `lambda` of `B + 1`.
    pub lambda: f64,
    /// Outer linearization iterations for the log-det objective.
    pub max_outer_iters: usize,
    /// Relative log-det improvement below which the loop has converged.
    pub volume_rel_tol: f64,
    /// Minimum acceptable posterior margin for every constraint.
    pub verify_margin: f64,
}

impl Default for SynthesisConfig {
    fn default() -> Self {
        Self {
            epsilon: 1e-6,
            lambda: 0.1,
            max_outer_iters: 20,
            volume_rel_tol: 1e-4,
            verify_margin: 0.0,
        }
    }
}

impl SynthesisConfig {
    pub fn validate(&self) -> Result<(), SynthError> {
        if !(self.epsilon > 0.0 && self.lambda > 0.0 && self.max_outer_iters >= 1) {
            return Err(SynthError::Config(format!(
                "need epsilon > 0, lambda > 0, max_outer_iters >= 1 (got {self:?})"
            )));
        }
        Ok(())
    }
}

/// Posterior margin of one constraint of the program.
#[derive(Debug, Clone, PartialEq)]
pub struct MarginEntry {
    pub label: String,
    pub margin: f64,
}

/// Margins of every constraint, recomputed by eigenvalue checks.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MarginReport {
    pub entries: Vec<MarginEntry>,
}

impl MarginReport {
    pub fn min(&self) -> f64 {
        self.entries
            .iter()
            .map(|e| e.margin)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn worst(&self) -> Option<&MarginEntry> {
        self.entries
            .iter()
            .min_by(|a, b| a.margin.total_cmp(&b.margin))
    }

    pub fn margins(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.margin).collect()
    }
}

/// Raw solver output `(Q, Y)` with its objective and posterior margins.
#[derive(Debug, Clone)]
pub struct Certificate {
    q: DMatrix<f64>,
    y: DMatrix<f64>,
    objective: f64,
    margins: MarginReport,
}

impl Certificate {
    /// Requires `Q` symmetric to 1e-10 (relative).
    pub fn new(
        q: DMatrix<f64>,
        y: DMatrix<f64>,
        objective: f64,
        margins: MarginReport,
    ) -> Result<Self, SynthError> {
        let asym = (&q - q.transpose()).norm();
        if asym > 1e-10 * q.norm().max(1.0) {
            return Err(SynthError::Numerical(format!(
                "certificate Q is asymmetric (residual {asym:.3e})"
            )));
        }
        Ok(Self {
            q,
            y,
            objective,
            margins,
        })
    }

    pub fn q(&self) -> &DMatrix<f64> {
        &self.q
    }

    pub fn y(&self) -> &DMatrix<f64> {
        &self.y
    }

    /// Achieved `log det Q`.
    pub fn objective(&self) -> f64 {
        self.objective
    }

    pub fn margins(&self) -> &MarginReport {
        &self.margins
    }
}

#[derive(Debug, Clone, Error)]
pub enum SynthError {
    #[error("LMI subproblem is infeasible: {detail}")]
    Infeasible { detail: String },
    #[error("outer loop produced no verified feasible iterate")]
    SolverStalled,
    #[error("verification failed at `{}` (margin {:.3e})",
            report.worst().map(|w| w.label.as_str()).unwrap_or("?"),
            report.min())]
    VerificationFailed { report: MarginReport },
    #[error("no equilibrium produced a feasible barrier pair")]
    EmptyBank,
    #[error("invalid synthesis configuration: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

/// How the outer determinant-maximization loop ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    /// Relative volume improvement fell below tolerance.
    Converged,
    /// The next linearization stopped improving the volume.
    NoImprovement,
    /// Iteration budget exhausted; best verified iterate returned.
    MaxIterations,
    /// Solver failed mid-loop; best verified iterate returned.
    SolverHalted,
}

/// One synthesized pair with its certificate and volume trace.
#[derive(Debug, Clone)]
pub struct PairSynthesis {
    pub pair: QuadraticBarrierPair,
    pub certificate: Certificate,
    /// `log det Q` of each accepted outer iterate, non-decreasing.
    pub volume_history: Vec<f64>,
    pub termination: Termination,
}

// --------------------------------------------------------------------------
// Variable packing
// --------------------------------------------------------------------------

/// Index map for the stacked decision vector `[vech(Q); vec(Y)]`.
struct VarMap {
    n: usize,
    m: usize,
}

impl VarMap {
    fn new(n: usize, m: usize) -> Self {
        Self { n, m }
    }

    fn count(&self) -> usize {
        self.n * (self.n + 1) / 2 + self.m * self.n
    }

    /// Variable index of `Q[(r, c)]` (upper triangle, column-major).
    fn q(&self, r: usize, c: usize) -> usize {
        let (r, c) = if r <= c { (r, c) } else { (c, r) };
        c * (c + 1) / 2 + r
    }

    /// Variable index of `Y[(j, c)]`.
    fn y(&self, j: usize, c: usize) -> usize {
        self.n * (self.n + 1) / 2 + j * self.n + c
    }

    /// Symmetric basis matrix for the `Q[(r, c)]` variable.
    fn sym_basis(&self, r: usize, c: usize) -> DMatrix<f64> {
        let mut e = DMatrix::zeros(self.n, self.n);
        if r == c {
            e[(r, r)] = 1.0;
        } else {
            e[(r, c)] = 1.0;
            e[(c, r)] = 1.0;
        }
        e
    }

    fn unpack(&self, x: &[f64]) -> (DMatrix<f64>, DMatrix<f64>) {
        let mut q = DMatrix::zeros(self.n, self.n);
        for c in 0..self.n {
            for r in 0..=c {
                q[(r, c)] = x[self.q(r, c)];
                q[(c, r)] = x[self.q(r, c)];
            }
        }
        let mut y = DMatrix::zeros(self.m, self.n);
        for j in 0..self.m {
            for c in 0..self.n {
                y[(j, c)] = x[self.y(j, c)];
            }
        }
        (q, y)
    }
}

// --------------------------------------------------------------------------
// Program assembly and posterior verification
// --------------------------------------------------------------------------

fn build_program(ldi: &PolytopicLdi, cfg: &SynthesisConfig, w: &DMatrix<f64>) -> AffineSdp {
    let n = ldi.state_dim();
    let m = ldi.input_dim();
    let vars = VarMap::new(n, m);
    let mut sdp = AffineSdp::new(vars.count());

    // maximize trace(W Q)
    let mut objective = vec![0.0; vars.count()];
    for c in 0..n {
        for r in 0..=c {
            objective[vars.q(r, c)] = if r == c { w[(r, r)] } else { 2.0 * w[(r, c)] };
        }
    }
    sdp.maximize(&objective);

    // Q >= (eps + tighten) I
    let mut q_terms = Vec::new();
    for c in 0..n {
        for r in 0..=c {
            q_terms.push((vars.q(r, c), vars.sym_basis(r, c)));
        }
    }
    let floor = -(cfg.epsilon + SOLVE_TIGHTEN) * DMatrix::identity(n, n);
    sdp.psd_ge_zero(&floor, &q_terms);

    // a^T Q a <= alpha^2 - tighten per state row
    for row in ldi.state_rows() {
        let a = &row.normal;
        let mut coeffs = Vec::new();
        for c in 0..n {
            for r in 0..=c {
                let w_rc = if r == c {
                    a[r] * a[r]
                } else {
                    2.0 * a[r] * a[c]
                };
                if w_rc != 0.0 {
                    coeffs.push((vars.q(r, c), w_rc));
                }
            }
        }
        sdp.linear_le(&coeffs, row.bound * row.bound - SOLVE_TIGHTEN);
    }

    // [[Q, Y^T b], [b^T Y, beta^2]] >= tighten I per input row
    for row in ldi.input_rows() {
        let b = &row.normal;
        let dim = n + 1;
        let mut constant = DMatrix::zeros(dim, dim);
        for d in 0..n {
            constant[(d, d)] = -SOLVE_TIGHTEN;
        }
        constant[(n, n)] = row.bound * row.bound - SOLVE_TIGHTEN;
        let mut terms = Vec::new();
        for c in 0..n {
            for r in 0..=c {
                let mut e = DMatrix::zeros(dim, dim);
                e[(r, c)] = 1.0;
                e[(c, r)] = 1.0;
                terms.push((vars.q(r, c), e));
            }
        }
        for j in 0..m {
            for c in 0..n {
                let mut e = DMatrix::zeros(dim, dim);
                e[(c, n)] += b[j];
                e[(n, c)] += b[j];
                terms.push((vars.y(j, c), e));
            }
        }
        sdp.psd_ge_zero(&constant, &terms);
    }

    // -(A_l Q + Q A_l^T + B_l Y + Y^T B_l^T) - (eps + tighten) I - lambda Q >= 0
    for (a_l, b_l) in ldi.vertex_a().iter().zip(ldi.vertex_b()) {
        let mut terms = Vec::new();
        for c in 0..n {
            for r in 0..=c {
                let e = vars.sym_basis(r, c);
                let t = -(a_l * &e + &e * a_l.transpose()) - cfg.lambda * &e;
                terms.push((vars.q(r, c), t));
            }
        }
        for j in 0..m {
            for c in 0..n {
                let bj = b_l.column(j);
                let mut t = DMatrix::zeros(n, n);
                for r in 0..n {
                    t[(r, c)] -= bj[r];
                    t[(c, r)] -= bj[r];
                }
                terms.push((vars.y(j, c), t));
            }
        }
        let constant = -(cfg.epsilon + SOLVE_TIGHTEN) * DMatrix::identity(n, n);
        sdp.psd_ge_zero(&constant, &terms);
    }

    sdp
}

fn min_eigenvalue(sym: &DMatrix<f64>) -> f64 {
    let s = (sym + sym.transpose()) * 0.5;
    s.symmetric_eigenvalues()
        .iter()
        .fold(f64::INFINITY, |acc, &v| acc.min(v))
}

/// Recomputes every constraint margin of the (untightened) program by
/// direct eigenvalue computation.
pub fn compute_margins(
    q: &DMatrix<f64>,
    y: &DMatrix<f64>,
    ldi: &PolytopicLdi,
    cfg: &SynthesisConfig,
) -> MarginReport {
    let n = ldi.state_dim();
    let mut entries = Vec::new();
    entries.push(MarginEntry {
        label: "q_min_eigenvalue".into(),
        margin: min_eigenvalue(q) - cfg.epsilon,
    });
    for (i, row) in ldi.state_rows().iter().enumerate() {
        let a = &row.normal;
        let value = (q * a).dot(a);
        entries.push(MarginEntry {
            label: format!("state_row_{i}"),
            margin: row.bound * row.bound - value,
        });
    }
    for (i, row) in ldi.input_rows().iter().enumerate() {
        let b = &row.normal;
        let ytb = y.transpose() * b;
        let mut block = DMatrix::zeros(n + 1, n + 1);
        block.view_mut((0, 0), (n, n)).copy_from(q);
        for r in 0..n {
            block[(r, n)] = ytb[r];
            block[(n, r)] = ytb[r];
        }
        block[(n, n)] = row.bound * row.bound;
        entries.push(MarginEntry {
            label: format!("input_row_{i}"),
            margin: min_eigenvalue(&block),
        });
    }
    for (l, (a_l, b_l)) in ldi.vertex_a().iter().zip(ldi.vertex_b()).enumerate() {
        let m = a_l * q
            + q * a_l.transpose()
            + b_l * y
            + y.transpose() * b_l.transpose()
            + DMatrix::identity(n, n) * cfg.epsilon
            + q * cfg.lambda;
        entries.push(MarginEntry {
            label: format!("decay_vertex_{l}"),
            margin: min_eigenvalue(&(-m)),
        });
    }
    MarginReport { entries }
}

/// Re-checks a certificate against an LDI; passes iff the minimum margin is
/// at least `cfg.verify_margin`.
pub fn verify_certificate(
    cert: &Certificate,
    ldi: &PolytopicLdi,
    cfg: &SynthesisConfig,
) -> Result<MarginReport, SynthError> {
    let report = compute_margins(cert.q(), cert.y(), ldi, cfg);
    if report.min() < cfg.verify_margin {
        return Err(SynthError::VerificationFailed { report });
    }
    Ok(report)
}

/// `log det Q` through a Cholesky factorization; `None` if not PD.
pub fn log_det(q: &DMatrix<f64>) -> Option<f64> {
    let chol = q.clone().cholesky()?;
    let l = chol.l();
    Some(2.0 * (0..q.nrows()).map(|i| l[(i, i)].ln()).sum::<f64>())
}

/// Extracts the feedback gain `K = Y Q^{-1}` from a certificate.
pub fn extract_gain(cert: &Certificate) -> Result<DMatrix<f64>, SynthError> {
    let chol =
        cert.q().clone().cholesky().ok_or_else(|| {
            SynthError::Numerical("certificate Q is not positive definite".into())
        })?;
    // K Q = Y  <=>  Q K^T = Y^T (Q symmetric).
    let k = chol.solve(&cert.y().transpose()).transpose();
    let residual = (&k * cert.q() - cert.y()).norm();
    if residual > 1e-8 {
        return Err(SynthError::Numerical(format!(
            "gain extraction residual {residual:.3e} exceeds 1e-8"
        )));
    }
    Ok(k)
}

// --------------------------------------------------------------------------
// Outer loop
// --------------------------------------------------------------------------

/// Solves the subproblem for one LDI and returns a verified barrier pair.
///
/// Hitting the iteration budget is not an error as long as some iterate
/// verified; `SolverStalled` is returned only when no iterate did.
pub fn synthesize_barrier_pair(
    ldi: &PolytopicLdi,
    cfg: &SynthesisConfig,
) -> Result<PairSynthesis, SynthError> {
    cfg.validate()?;
    let n = ldi.state_dim();
    let vars = VarMap::new(n, ldi.input_dim());
    let mut w = DMatrix::identity(n, n);
    let mut best: Option<(DMatrix<f64>, DMatrix<f64>, f64, MarginReport)> = None;
    let mut history = Vec::new();
    let mut termination = Termination::MaxIterations;

    for _ in 0..cfg.max_outer_iters {
        let program = build_program(ldi, cfg, &w);
        let x = match program.solve() {
            Ok(x) => x,
            Err(SdpError::Infeasible) if best.is_none() => {
                return Err(SynthError::Infeasible {
                    detail: "interior point reports primal infeasibility".into(),
                })
            }
            Err(_) => {
                termination = Termination::SolverHalted;
                break;
            }
        };
        let (q, y) = vars.unpack(&x);
        let report = compute_margins(&q, &y, ldi, cfg);
        if report.min() < cfg.verify_margin {
            termination = Termination::SolverHalted;
            break;
        }
        let ld = log_det(&q).ok_or_else(|| {
            SynthError::Numerical("verified iterate lost positive definiteness".into())
        })?;
        let improved = match &best {
            None => true,
            Some((_, _, best_ld, _)) => ld > *best_ld,
        };
        if !improved {
            termination = Termination::NoImprovement;
            break;
        }
        let improvement = best
            .as_ref()
            .map(|(_, _, best_ld, _)| (ld - best_ld) / best_ld.abs().max(1.0));
        history.push(ld);
        best = Some((q.clone(), y, ld, report));
        if let Some(gain) = improvement {
            if gain <= cfg.volume_rel_tol {
                termination = Termination::Converged;
                break;
            }
        }
        // Refit the linearization point; trace normalization keeps the
        // objective well scaled when Q is nearly singular.
        let chol = q
            .cholesky()
            .ok_or_else(|| SynthError::Numerical("iterate not factorizable".into()))?;
        let mut w_next = chol.inverse();
        w_next = (&w_next + w_next.transpose()) * 0.5;
        w_next *= n as f64 / w_next.trace();
        w = w_next;
    }

    let (q, y, objective, margins) = best.ok_or(SynthError::SolverStalled)?;
    let certificate = Certificate::new(q, y, objective, margins)?;
    let k = extract_gain(&certificate)?;
    let pair = QuadraticBarrierPair::new(
        ldi.x_e().clone(),
        ldi.u_e().clone(),
        certificate.q().clone(),
        k,
    )
    .map_err(|e| SynthError::Numerical(format!("pair construction failed: {e}")))?;
    Ok(PairSynthesis {
        pair,
        certificate,
        volume_history: history,
        termination,
    })
}

// --------------------------------------------------------------------------
// Bank synthesis
// --------------------------------------------------------------------------

/// Outcome for one requested equilibrium.
#[derive(Debug, Clone)]
pub struct EquilibriumOutcome {
    pub x_e: DVector<f64>,
    pub status: EquilibriumStatus,
}

#[derive(Debug, Clone)]
pub enum EquilibriumStatus {
    Feasible {
        log_det: f64,
        min_margin: f64,
        outer_iters: usize,
    },
    Skipped {
        reason: String,
    },
}

/// A synthesized bank plus per-equilibrium bookkeeping.
#[derive(Debug, Clone)]
pub struct BankSynthesis {
    pub bank: MinQuadraticBarrier,
    /// Aligned with `bank.pairs()`.
    pub syntheses: Vec<PairSynthesis>,
    /// One entry per requested equilibrium, in input order.
    pub outcomes: Vec<EquilibriumOutcome>,
}

/// Linearizes and synthesizes at every equilibrium, skipping (with a
/// recorded reason) the ones that fail rather than aborting the bank.
pub fn synthesize_bank(
    plant: &dyn Plant,
    equilibria: &[DVector<f64>],
    cfg: &SynthesisConfig,
) -> Result<BankSynthesis, SynthError> {
    cfg.validate()?;
    let mut pairs = Vec::new();
    let mut syntheses = Vec::new();
    let mut outcomes = Vec::new();
    for x_e in equilibria {
        let status = match plant
            .linearize(x_e)
            .map_err(|e| e.to_string())
            .and_then(|ldi| synthesize_barrier_pair(&ldi, cfg).map_err(|e| e.to_string()))
        {
            Ok(synthesis) => {
                let status = EquilibriumStatus::Feasible {
                    log_det: synthesis.certificate.objective(),
                    min_margin: synthesis.certificate.margins().min(),
                    outer_iters: synthesis.volume_history.len(),
                };
                pairs.push(synthesis.pair.clone());
                syntheses.push(synthesis);
                status
            }
            Err(reason) => EquilibriumStatus::Skipped { reason },
        };
        outcomes.push(EquilibriumOutcome {
            x_e: x_e.clone(),
            status,
        });
    }
    let bank = MinQuadraticBarrier::new(pairs).map_err(|_| SynthError::EmptyBank)?;
    Ok(BankSynthesis {
        bank,
        syntheses,
        outcomes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use minquad_core::plant::Pendulum;

    fn pendulum_ldi(theta_e: f64) -> PolytopicLdi {
        Pendulum::default().linearize_at(theta_e).unwrap()
    }

    #[test]
    fn extract_gain_identity_q_returns_y() {
        let y = DMatrix::from_row_slice(1, 2, &[3.0, -4.0]);
        let cert = Certificate::new(
            DMatrix::identity(2, 2),
            y.clone(),
            0.0,
            MarginReport::default(),
        )
        .unwrap();
        assert_eq!(extract_gain(&cert).unwrap(), y);
    }

    #[test]
    fn extract_gain_diagonal_q() {
        let q = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 1.0]);
        let y = DMatrix::from_row_slice(1, 2, &[1.0, 1.0]);
        let cert = Certificate::new(q, y, 0.0, MarginReport::default()).unwrap();
        let k = extract_gain(&cert).unwrap();
        assert!((k[(0, 0)] - 0.5).abs() < 1e-12);
        assert!((k[(0, 1)] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn upright_pendulum_pair_is_feasible_and_verified() {
        let ldi = pendulum_ldi(0.0);
        let cfg = SynthesisConfig::default();
        let result = synthesize_barrier_pair(&ldi, &cfg).unwrap();
        // Posterior slack of the position row: a1^T Q a1 <= alpha^2.
        let q = result.certificate.q();
        assert!(q[(0, 0)] <= 0.0625 + 1e-9, "Q11 = {}", q[(0, 0)]);
        assert!(result.certificate.margins().min() >= 0.0);
        // Both gain entries push against the motion (negative feedback).
        let k = result.pair.k();
        assert!(k[(0, 0)] < 0.0 && k[(0, 1)] < 0.0, "K = {k}");
        // Closed-loop vertices are Hurwitz with abscissa <= -lambda/2.
        for (a, b) in ldi.vertex_a().iter().zip(ldi.vertex_b()) {
            let acl = a + b * k;
            let re_max = acl
                .complex_eigenvalues()
                .iter()
                .map(|e| e.re)
                .fold(f64::NEG_INFINITY, f64::max);
            assert!(re_max <= -cfg.lambda / 2.0 + 1e-9, "abscissa {re_max}");
        }
    }

    #[test]
    fn accepted_volume_history_is_monotone() {
        let result =
            synthesize_barrier_pair(&pendulum_ldi(0.3), &SynthesisConfig::default()).unwrap();
        assert!(!result.volume_history.is_empty());
        for w in result.volume_history.windows(2) {
            assert!(w[1] >= w[0] - 1e-6 * w[0].abs().max(1.0));
        }
        assert!(result.volume_history.last().unwrap() - result.certificate.objective() == 0.0);
    }

    #[test]
    fn tight_torque_budget_is_infeasible() {
        // At theta_e = 0.5 holding torque is ~5.7, beyond a 1.0 limit; the
        // LDI constructor already rejects it.
        let p = Pendulum::new(1.0, 1.213, 9.8, 1.0, 1.0, 1.0);
        assert!(p.linearize_at(0.5).is_err());
    }

    #[test]
    fn scaled_certificate_fails_state_row_verification() {
        let ldi = pendulum_ldi(0.0);
        let cfg = SynthesisConfig::default();
        let good = synthesize_barrier_pair(&ldi, &cfg).unwrap();
        let bad = Certificate::new(
            good.certificate.q() * 100.0,
            good.certificate.y().clone(),
            0.0,
            MarginReport::default(),
        )
        .unwrap();
        match verify_certificate(&bad, &ldi, &cfg) {
            Err(SynthError::VerificationFailed { report }) => {
                // Scaling inflates a^T Q a past alpha^2 on the position row.
                let row = report
                    .entries
                    .iter()
                    .find(|e| e.label == "state_row_0")
                    .unwrap();
                assert!(row.margin < 0.0, "state row margin {}", row.margin);
            }
            other => panic!("expected verification failure, got {other:?}"),
        }
    }

    #[test]
    fn zero_gain_fails_decay_verification() {
        // The open-loop upright pendulum is unstable, so Y = 0 cannot
        // satisfy the decrease inequality.
        let ldi = pendulum_ldi(0.0);
        let cfg = SynthesisConfig::default();
        let cert = Certificate::new(
            DMatrix::identity(2, 2) * 1e-3,
            DMatrix::zeros(1, 2),
            0.0,
            MarginReport::default(),
        )
        .unwrap();
        match verify_certificate(&cert, &ldi, &cfg) {
            Err(SynthError::VerificationFailed { report }) => {
                let worst = report.worst().unwrap();
                assert!(
                    worst.label.starts_with("decay_vertex"),
                    "worst: {}",
                    worst.label
                );
            }
            other => panic!("expected verification failure, got {other:?}"),
        }
    }

    #[test]
    fn singleton_bank_min_equals_pair_barrier() {
        let plant = Pendulum::default();
        let eq = [DVector::from_row_slice(&[0.0, 0.0])];
        let result = synthesize_bank(&plant, &eq, &SynthesisConfig::default()).unwrap();
        assert_eq!(result.bank.len(), 1);
        let x = DVector::from_row_slice(&[0.05, 0.1]);
        let (value, index) = result.bank.min_eval(&x);
        assert_eq!(index, 0);
        assert_eq!(value, result.bank.pairs()[0].barrier(&x));
    }

    #[test]
    fn infeasible_equilibria_are_skipped_not_fatal() {
        let plant = Pendulum::default();
        let eq = [
            DVector::from_row_slice(&[0.0, 0.0]),
            DVector::from_row_slice(&[1.05, 0.0]), // outside the position bound
        ];
        let result = synthesize_bank(&plant, &eq, &SynthesisConfig::default()).unwrap();
        assert_eq!(result.bank.len(), 1);
        assert_eq!(result.outcomes.len(), 2);
        assert!(matches!(
            result.outcomes[1].status,
            EquilibriumStatus::Skipped { .. }
        ));
    }

    #[test]
    fn empty_bank_is_an_error() {
        let plant = Pendulum::default();
        let eq = [DVector::from_row_slice(&[1.05, 0.0])];
        assert!(matches!(
            synthesize_bank(&plant, &eq, &SynthesisConfig::default()),
            Err(SynthError::EmptyBank)
        ));
    }
}
