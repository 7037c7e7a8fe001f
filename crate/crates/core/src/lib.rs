//! Brine inclusions in sea ice: a phase-field model in one dimension and its
//! quasi-steady axisymmetric Stefan reduction.

pub mod model;
pub mod ode;
pub mod phasefield;
pub mod scenario;
pub mod stefan;
