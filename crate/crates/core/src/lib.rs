//! Pseudo-spectral simulation of the one- and two-phase Muskat problem with
//! an elastic interface.
//!
//! The interface is the graph `y = η(t, x)` of a periodic function. Its
//! motion is driven by the Dirichlet–Neumann operators of the fluid domains
//! below (`G⁻`) and above (`G⁺`) the interface, and the restoring force is the
//! fourth-order bending operator `E(η)`.

pub mod config;
pub mod dn;
pub mod elastic;
pub mod evolution;
pub mod paracalc;
pub mod params;
pub mod registry;
pub mod spectral;
pub mod two_phase;
pub mod verify;

pub use spectral::{Field, PeriodicGrid, Spectrum};
