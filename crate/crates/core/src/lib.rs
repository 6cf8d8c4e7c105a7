//! Discretisations of the Kuramoto-Sivashinsky equation on a periodic domain,
//! plus the dynamical-systems tooling used to compare them: time stepping,
//! steady-state continuation with bifurcation detection, periodic orbits and
//! spectral diagnostics.

pub mod analysis;
pub mod continuation;
pub mod eigen;
pub mod experiments;
pub mod error;
pub mod galerkin;
pub mod grid_models;
pub mod integrate;
pub mod io;
pub mod model;
pub mod odd;
pub mod orbits;
pub mod stencil;
pub mod system;

pub use error::{KsError, Result};
pub use model::{GalerkinState, GridField, ModelKind, ModelSpec};
pub use stencil::PeriodicSequence;
pub use odd::{OddLayout, OddState};
pub use system::{Geometry, System};
