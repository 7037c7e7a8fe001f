//! Quasi-steady axisymmetric Stefan reduction.
//!
//! Lengths are in mm (units of `L_b`), temperatures in °C with `θ* = 0 °C`,
//! salt in % weight. The generating curve runs from the bottom pole (`s = 0`)
//! to the top pole (`s = 1`) on cell-centred nodes `s_i = (i + ½)/n`.

mod banded;
mod drift;
mod geometry;
mod pinch;
mod pore;
mod solver;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::ModelError;
use crate::ode::OdeError;

pub use banded::BandedLu;
pub use drift::{centroid_x3, drift_velocity};
pub use geometry::{
    capsule, curvature, cylinder, enclosed_volume, mean_velocity_salt, normal_velocity,
    normal_velocity_with_salt, salt_density, sphere, surface_area,
};
pub use pinch::detect_pinch;
pub use pore::{classify_pore_regime, equilibrium_pore, PoreProfile, PoreRegime, PoreTermination};
pub use solver::{
    arc_length_spread, residual, residual_jacobian, step_backward_euler, NewtonReport, StepOutcome,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StefanError {
    #[error("geometry error: {0}")]
    Geometry(String),
    #[error("Newton did not converge after {iterations} iterations (residual {residual:e}) at tau = {tau}")]
    NewtonDivergence {
        iterations: usize,
        residual: f64,
        tau: f64,
    },
    #[error("singular linear system at row {0}")]
    Singular(usize),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Ode(#[from] OdeError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Topology {
    /// Both ends on the symmetry axis.
    ClosedInclusion,
    /// Ends are free; no enclosed volume.
    OpenPore,
}

/// Discretised generating curve `(r(s), x₃(s))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterfaceCurve {
    pub s_nodes: Vec<f64>,
    pub r: Vec<f64>,
    pub x3: Vec<f64>,
    pub topology: Topology,
}

impl InterfaceCurve {
    pub fn new(r: Vec<f64>, x3: Vec<f64>, topology: Topology) -> Result<Self, StefanError> {
        let n = r.len();
        if n < 16 {
            return Err(StefanError::Invalid(format!("node count {n} below 16")));
        }
        if x3.len() != n {
            return Err(StefanError::Invalid(format!(
                "array lengths differ: r has {n}, x3 has {}",
                x3.len()
            )));
        }
        if r.iter().chain(x3.iter()).any(|v| !v.is_finite()) {
            return Err(StefanError::Invalid("non-finite coordinate".into()));
        }
        let s_nodes = (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect();
        Ok(Self {
            s_nodes,
            r,
            x3,
            topology,
        })
    }

    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }

    pub fn ds(&self) -> f64 {
        1.0 / self.len() as f64
    }
}

/// Linear quasi-steady temperature `Θ₀(x₃) = a₀ − b₀x₃` in °C.
///
/// Positive `b0` means colder upwards (warmer at depth), in °C per mm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThermalProfile {
    pub a0: f64,
    pub b0: f64,
}

impl ThermalProfile {
    pub fn temperature(&self, x3: f64) -> f64 {
        self.a0 - self.b0 * x3
    }
}

/// Evolving interface with its conserved salt content.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BrineState {
    pub curve: InterfaceCurve,
    /// Total salt `N_T`, % weight · mm³.
    pub total_salt: f64,
    pub tau: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PinchEvent {
    pub tau: f64,
    pub s_location: f64,
    pub x3_location: f64,
}
