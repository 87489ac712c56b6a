//! Vortex particle flow-map (VPFM) simulation core.
//!
//! Vorticity is carried by particles along flow maps whose Jacobians and
//! Hessians are marched with RK4, then splatted to a staggered grid where the
//! velocity is rebuilt from a vector-potential solve plus a cut-cell harmonic
//! correction. Solids enter through no-through fractions and a one-face-deep
//! Brinkmann penalization band.
//!
//! Everything numeric is generic over [`Real`] (implemented for `f32` and
//! `f64`) and over the spatial dimension `D` (2 or 3). The aliases below pin
//! the common `f64` instantiations.

pub mod diagnostics;
pub mod dynamics;
pub mod elliptic;
pub mod flowmap;
pub mod grid;
pub mod solids;
pub mod transfer;

mod real;

pub use real::Real;

pub type GridDesc2 = grid::GridDesc<f64, 2>;
pub type GridDesc3 = grid::GridDesc<f64, 3>;
pub type Field2 = grid::StaggeredField<f64, 2>;
pub type Field3 = grid::StaggeredField<f64, 3>;
pub type Particle2 = flowmap::VortexParticle<f64, 2>;
pub type Particle3 = flowmap::VortexParticle<f64, 3>;
pub type SimState2 = dynamics::SimState<f64, 2>;
pub type SimState3 = dynamics::SimState<f64, 3>;
pub type SimConfig2 = dynamics::SimConfig<f64, 2>;
pub type SimConfig3 = dynamics::SimConfig<f64, 3>;
