//! Spectral simulation of the singularly perturbed curve shortening flow
//!
//! `∂_t γ = (κ − 2ε ∂_s² κ − ε κ³) ν`
//!
//! on closed immersed plane curves, the L²(ds) gradient flow of
//! `G^ε(γ) = ∫(1 + εκ²) ds`. At `ε = 0` it reduces to the curve shortening
//! flow. Alongside the integrators the crate ships the diagnostics and
//! reference solutions used to check the flows: circle ODE oracles, a
//! finite-difference gradient check, identity audits for the evolution of
//! `κ` and `∫κ² ds`, and an `ε → 0` convergence study.

pub mod analysis;
pub mod curve;
pub mod differential;
pub mod energy;
mod error;
pub mod flow;
pub mod oracle;
mod spectral;

pub use curve::{geometry, make_circle, make_ellipse, CurveGeometry, DiscreteCurve};
pub use error::{Error, Result};
pub use flow::{run, FlowConfig, Scheme, Status, Trajectory};

