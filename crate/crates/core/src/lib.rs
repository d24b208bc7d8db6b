//! Exponential collocation methods for the cubic nonlinear Schrödinger
//! equation `iu_t + Δu = λ|u|²u` on a periodic domain, with a Fourier
//! pseudospectral discretization in space.
//!
//! Layers, bottom up:
//!
//! * [`spectral`]: grids, transforms, norms, energy and mass.
//! * [`phi`]: scalar φ-functions on the diagonal spectrum.
//! * [`collocation`]: Gauss–Legendre data, the orthonormal basis on
//!   `[0, 1]` and the diagonal coefficient operators.
//! * [`integrator`]: ECMr, Strang and exponential-AVF steppers.
//! * [`experiments`]: problem presets, studies and CSV output used by the
//!   `nls-expocol` binary.

pub mod collocation;
pub mod experiments;
pub mod integrator;
pub mod parallel;
pub mod phi;
pub mod spectral;

pub use collocation::{build_operator_set, CollocationTableau, EcmOperatorSet};
pub use integrator::{integrate, Method, RunRecord, StepReport, Stepper, StepperConfig};
pub use spectral::{make_grid, SpectralField, TorusGrid};
