//! Hysteretic two-mode safety supervisor.
//!
//! In `Transparent` mode the requested input passes through bit-for-bit; the
//! supervisor switches to `Safety` mode when the min-barrier value rises to
//! the upper threshold and hands control to the barrier feedback until the
//! value falls back below the lower threshold. The gap between the two
//! thresholds sets the switching rate when the system leans on a limit.

use nalgebra::DVector;
use thiserror::Error;

use crate::barrier::MinQuadraticBarrier;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum SupervisorError {
    #[error("thresholds must satisfy 0 >= eps_hi > eps_lo > -1 (got {eps_hi}, {eps_lo})")]
    InvalidThresholds { eps_hi: f64, eps_lo: f64 },
}

/// Supervisor mode; `Safety` carries the barrier pair currently in control.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SupervisorMode {
    Transparent,
    Safety { active: usize },
}

impl SupervisorMode {
    pub fn is_safety(&self) -> bool {
        matches!(self, SupervisorMode::Safety { .. })
    }

    /// Index of the active barrier pair, present exactly in `Safety` mode.
    pub fn active_index(&self) -> Option<usize> {
        match self {
            SupervisorMode::Transparent => None,
            SupervisorMode::Safety { active } => Some(*active),
        }
    }
}

/// Output of one supervisor step.
#[derive(Debug, Clone)]
pub struct SupervisorStep {
    /// Input to apply to the plant (before any plant-side saturation).
    pub input: DVector<f64>,
    /// Min-barrier value at the current state.
    pub barrier: f64,
    /// Argmin pair index at the current state (lowest index on ties).
    pub nearest: usize,
    /// Mode after this step's transition.
    pub mode: SupervisorMode,
}

/// Two-mode hysteresis automaton around a barrier bank.
#[derive(Debug, Clone)]
pub struct Supervisor {
    eps_hi: f64,
    eps_lo: f64,
    mode: SupervisorMode,
}

impl Supervisor {
    /// Thresholds must satisfy `0 >= eps_hi > eps_lo > -1`.
    pub fn new(eps_hi: f64, eps_lo: f64) -> Result<Self, SupervisorError> {
        if !(eps_hi <= 0.0 && eps_hi > eps_lo && eps_lo > -1.0) {
            return Err(SupervisorError::InvalidThresholds { eps_hi, eps_lo });
        }
        Ok(Self {
            eps_hi,
            eps_lo,
            mode: SupervisorMode::Transparent,
        })
    }

    pub fn eps_hi(&self) -> f64 {
        self.eps_hi
    }

    pub fn eps_lo(&self) -> f64 {
        self.eps_lo
    }

    pub fn mode(&self) -> SupervisorMode {
        self.mode
    }

    /// One sampled step: transition on the current barrier value first, then
    /// select the output under the new mode.
    ///
    /// The active pair is re-selected by argmin on every `Safety` step, so
    /// the controlled state may hand over between ellipsoids while settling.
    /// The supervisor never refuses a step; safety rests on starting inside
    /// the safe set.
    pub fn step(
        &mut self,
        bank: &MinQuadraticBarrier,
        x: &DVector<f64>,
        u_hat: &DVector<f64>,
    ) -> SupervisorStep {
        let (barrier, nearest) = bank.min_eval(x);
        self.mode = match self.mode {
            SupervisorMode::Transparent if barrier >= self.eps_hi => {
                SupervisorMode::Safety { active: nearest }
            }
            SupervisorMode::Safety { .. } if barrier <= self.eps_lo => SupervisorMode::Transparent,
            SupervisorMode::Safety { .. } => SupervisorMode::Safety { active: nearest },
            unchanged => unchanged,
        };
        let input = match self.mode {
            SupervisorMode::Transparent => u_hat.clone(),
            SupervisorMode::Safety { active } => bank.pairs()[active].control(x),
        };
        SupervisorStep {
            input,
            barrier,
            nearest,
            mode: self.mode,
        }
    }

    /// Forget any engagement and return to `Transparent`.
    pub fn reset(&mut self) {
        self.mode = SupervisorMode::Transparent;
    }
}

/// Membership in the supervised safe set `{x : minB(x) <= eps_hi}` (closed).
pub fn safe_set_membership(bank: &MinQuadraticBarrier, x: &DVector<f64>, eps_hi: f64) -> bool {
    bank.min_eval(x).0 <= eps_hi
}
