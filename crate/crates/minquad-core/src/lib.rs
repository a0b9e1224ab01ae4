//! Runtime side of a min-quadratic barrier safety controller.
//!
//! The crate provides the pieces that run inside a control loop:
//!
//! * [`plant`] — example plants (inverted pendulum, double spring-mass) with
//!   symmetric box constraints on state and input,
//! * [`ldi`] — conservative polytopic linear-differential-inclusion models of
//!   a plant around an equilibrium, with brute-force linearization-error
//!   bounds,
//! * [`barrier`] — quadratic barrier pairs `(B, k)` and their pointwise-min
//!   combination over a bank of equilibria,
//! * [`supervisor`] — the two-mode hysteretic supervisor that passes a
//!   requested input through untouched while the state is safely interior
//!   and switches to the barrier feedback near the boundary,
//! * [`sim`] — fixed-step RK4 closed-loop simulation with per-step
//!   constraint monitoring.
//!
//! Synthesis of the barrier pairs (the determinant-maximization LMI
//! subproblem) lives in the companion `minquad` crate; this crate only
//! consumes the resulting `(Q, K)` data and is `no_std`-compatible
//! (`--no-default-features --features libm`) so the supervisor and barrier
//! evaluation can run on embedded targets.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod barrier;
pub mod ldi;
pub mod plant;
pub mod sim;
pub mod supervisor;

pub use barrier::{BarrierError, MinQuadraticBarrier, QuadraticBarrierPair};
pub use ldi::{zeta_bound, LdiError, PolytopicLdi};
pub use plant::{BoxRow, Pendulum, Plant, SpringMass};
pub use sim::{
    integrate_step, run_scenario, tracking_control_pendulum, ReferenceSignal, Scenario,
    ScenarioResult, SimError, TrackingGains, Trajectory, ViolationReport,
};
pub use supervisor::{safe_set_membership, Supervisor, SupervisorError, SupervisorMode};
