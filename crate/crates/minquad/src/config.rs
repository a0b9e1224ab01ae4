//! Job configuration: plant parameters, equilibrium grid, synthesis knobs.
//!
//! Configs are plain JSON. Every field has a default matching the worked
//! examples, so `{"plant": {"name": "pendulum"}}` is a complete config.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use minquad_core::plant::{Pendulum, Plant, SpringMass};

use crate::synth::SynthesisConfig;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default)]
pub struct PendulumParams {
    pub m: f64,
    pub l: f64,
    pub g: f64,
    pub theta_c: f64,
    pub omega_max: f64,
    pub tau_max: f64,
}

impl Default for PendulumParams {
    fn default() -> Self {
        Self {
            m: 1.0,
            l: 1.213,
            g: 9.8,
            theta_c: 1.0,
            omega_max: 1.0,
            tau_max: 10.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default)]
pub struct SpringMassParams {
    pub m1: f64,
    pub m2: f64,
    pub k: f64,
    pub pos_max: f64,
    pub vel_max: f64,
    pub deflection_max: f64,
    pub u_max: f64,
}

impl Default for SpringMassParams {
    fn default() -> Self {
        Self {
            m1: 1.0,
            m2: 1.0,
            k: 1.0,
            pos_max: 1.0,
            vel_max: 1.0,
            deflection_max: 1.0,
            u_max: 10.0,
        }
    }
}

/// Named plant with parameters, as stored in configs and bank files.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "name")]
pub enum PlantSpec {
    #[serde(rename = "pendulum")]
    Pendulum(PendulumParams),
    #[serde(rename = "spring-mass")]
    SpringMass(SpringMassParams),
}

impl PlantSpec {
    pub fn pendulum_default() -> Self {
        PlantSpec::Pendulum(PendulumParams::default())
    }

    pub fn spring_mass_default() -> Self {
        PlantSpec::SpringMass(SpringMassParams::default())
    }

    pub fn name(&self) -> &'static str {
        match self {
            PlantSpec::Pendulum(_) => "pendulum",
            PlantSpec::SpringMass(_) => "spring-mass",
        }
    }

    pub fn build(&self) -> Box<dyn Plant> {
        match self {
            PlantSpec::Pendulum(p) => Box::new(Pendulum::new(
                p.m,
                p.l,
                p.g,
                p.theta_c,
                p.omega_max,
                p.tau_max,
            )),
            PlantSpec::SpringMass(p) => Box::new(SpringMass::new(
                p.m1,
                p.m2,
                p.k,
                p.pos_max,
                p.vel_max,
                p.deflection_max,
                p.u_max,
            )),
        }
    }

    /// Equilibrium states for a scalar grid along the equilibrium manifold:
    /// `(theta, 0)` for the pendulum, `(y, 0, y, 0)` for the spring-mass.
    pub fn equilibria(&self, grid: &GridSpec) -> Vec<DVector<f64>> {
        grid.values()
            .into_iter()
            .map(|v| match self {
                PlantSpec::Pendulum(_) => DVector::from_row_slice(&[v, 0.0]),
                PlantSpec::SpringMass(_) => DVector::from_row_slice(&[v, 0.0, v, 0.0]),
            })
            .collect()
    }
}

/// Uniform scalar grid over the equilibrium manifold.
///
/// The default span stops at +-0.98 so the outermost pendulum equilibria
/// keep a usable validity width and a strictly positive torque budget.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default)]
pub struct GridSpec {
    pub count: usize,
    pub min: f64,
    pub max: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            count: 50,
            min: -0.98,
            max: 0.98,
        }
    }
}

impl GridSpec {
    pub fn values(&self) -> Vec<f64> {
        match self.count {
            0 => Vec::new(),
            1 => vec![self.min],
            n => (0..n)
                .map(|i| {
                    let t = (i as f64) / ((n - 1) as f64);
                    self.min * (1.0 - t) + self.max * t
                })
                .collect(),
        }
    }
}

/// Everything `synthesize` needs, parsed from one JSON file.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct JobConfig {
    pub plant: PlantSpec,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default)]
    pub synthesis: SynthesisConfig,
}

impl JobConfig {
    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}
